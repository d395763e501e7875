// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cdoa/scene.hpp"

namespace cdoa {

/** Gamma-prior hyperparameters and loop controls for the EM estimator. */
struct Hyper {
    scalar_t a = 1e-2, b = 1e-2;    ///< noise precision prior
    scalar_t c = 1e-2, d = 1e-2;    ///< signal precision prior
    scalar_t e1 = 1e-2, f1 = 1e-2;  ///< transmit-coupling precision prior
    scalar_t e2 = 1e-2, f2 = 1e-2;  ///< receive-coupling precision prior
    index_t n_iter_max = 1000;
    scalar_t lambda_th = 1e-3;

    void validate() const;
};

/** Estimator variant. */
enum class SblMode {
    full,         ///< joint coupling + offset estimation
    no_coupling,  ///< coupling frozen at identity, offsets estimated
    on_grid,      ///< coupling frozen at identity, offsets frozen at zero
};

/** All mutable EM quantities. */
struct SblmcState {
    cmat_t mu;       ///< U x P posterior means, column per pulse
    cmat_t sigma_x;  ///< U x U posterior covariance, Hermitian PSD
    rvec_t beta;     ///< U signal precisions
    scalar_t alpha_n = 1.0;
    cvec_t c_tx;          ///< length M, entry 0 = 1 after each iteration
    cvec_t c_rx;          ///< length N, entry 0 = 1 after each iteration
    rvec_t vartheta_tx;   ///< M coupling precisions
    rvec_t vartheta_rx;   ///< N coupling precisions
    rvec_t nu_deg;        ///< U off-grid offsets, degrees, |nu| <= step/2
    index_t iter = 1;
    scalar_t lambda = std::numeric_limits<scalar_t>::infinity();
    int coupling_skips = 0;  ///< coupling updates dropped on a degenerate solve

    /// Combined coupling vector c_rx kron c_tx (length MN).
    cvec_t coupling() const { return kron(c_rx, c_tx); }
};

/** Final estimate plus the convergence trace. */
struct EstimateResult {
    rvec_t spectrum;   ///< spatial spectrum P_X, length U
    rvec_t doas_deg;   ///< K estimated angles, sorted ascending
    SblmcState state;  ///< state at exit
    std::vector<scalar_t> trace;  ///< lambda per iteration, from iteration 2 on
    bool converged = false;
};

/// State at Algorithm start: identity coupling, unit precisions, zero offsets.
SblmcState init_state(const Dictionary& dict, const Hyper& hyper);

/**
 * E-step: writes state.mu and state.sigma_x from the current parameters.
 * Propagates SingularMatrix when the precision matrix degenerates.
 */
void posterior_update(SblmcState& state, const Dictionary& dict, const cmat_t& r);

/// Spatial spectrum P_X(u) = Re(sigma_x(u,u)) + mean_p |mu(u,p)|^2.
rvec_t spectrum(const SblmcState& state);

/// Signal precision update beta_u = (P+c-1)/(d + P*Re(sigma_uu) + sum_p |mu_up|^2).
rvec_t update_beta(const SblmcState& state, const Hyper& hyper);

/** Normal-equations system H c = z behind a coupling update. */
struct CouplingSystem {
    cmat_t h;
    cvec_t z;
};

/// Assemble the transmit-coupling system (H_T, z_T).
CouplingSystem coupling_tx_system(const SblmcState& state, const Dictionary& dict,
                                  const cmat_t& r);

/// Assemble the receive-coupling system (H_R, z_R); regularized by vartheta_rx.
CouplingSystem coupling_rx_system(const SblmcState& state, const Dictionary& dict,
                                  const cmat_t& r);

/**
 * Solve the transmit-coupling system and renormalize so entry 0 = 1.
 * Returns nullopt when the solve is singular or |entry 0| < 1e-8; the caller
 * keeps the previous vector in that case.
 */
std::optional<cvec_t> update_coupling_tx(const SblmcState& state, const Dictionary& dict,
                                         const cmat_t& r);

/// Mirror of update_coupling_tx for the receive side.
std::optional<cvec_t> update_coupling_rx(const SblmcState& state, const Dictionary& dict,
                                         const cmat_t& r);

/// Coupling precisions: e/(f + |c|^2) entrywise, for both sides.
std::pair<rvec_t, rvec_t> update_precisions(const SblmcState& state, const Hyper& hyper);

/** Real linear system for the off-grid offsets, restricted to the active set. */
struct OffsetSystem {
    rmat_t h;                     ///< U x U (full); solved on `active` only
    rvec_t z;                     ///< length U
    std::vector<index_t> active;  ///< indices with spectrum > max * 1e-3
};

/// Assemble the offset system (Hermitian-weighted residual match, per radian).
OffsetSystem offset_system(const SblmcState& state, const Dictionary& dict, const cmat_t& r);

/**
 * Solve the offset system on the active set, convert to degrees, clamp each
 * entry to [-step/2, step/2] and zero the inactive entries. A singular solve
 * is retried once with a small ridge.
 */
rvec_t update_offsets(const SblmcState& state, const Dictionary& dict, const cmat_t& r);

/// Noise precision update alpha_n = (MNP+a-1)/(P*N1 + N2 + b).
scalar_t update_noise(const SblmcState& state, const Dictionary& dict, const cmat_t& r,
                      const Hyper& hyper);

/**
 * Run the EM loop: operator assembly, posterior, spectrum, beta, coupling,
 * coupling precisions, offsets, noise precision; stop when iter exceeds
 * n_iter_max or the relative beta change drops to lambda_th.
 *
 * In the full mode the coupling and offset updates engage only after the
 * relative beta change first falls below a warm-start gate (the stop re-arms
 * at that switch), and an offset solution that exits its grid cell hands its
 * precision over to the adjacent cell, which represents the same angle with
 * an in-range offset. Coupling solutions with any off-diagonal magnitude
 * above 1 are rejected like singular solves.
 */
EstimateResult run_sblmc(const cmat_t& r, const Dictionary& dict, const Hyper& hyper,
                         index_t k, SblMode mode);

/// Convenience overload on simulator output.
EstimateResult run_sblmc(const Snapshots& snaps, const Dictionary& dict, const Hyper& hyper,
                         index_t k, SblMode mode);

/**
 * Pick the k largest local maxima (ties to the lower index; endpoints count;
 * filled from the largest non-peak entries when maxima run short) and return
 * the angles at those indices, sorted ascending.
 */
rvec_t peak_pick(const rvec_t& spectrum, const rvec_t& angles_deg, index_t k);

/** Fine-grid scan produced by the subspace baseline. */
struct MusicResult {
    rvec_t angles_deg;
    rvec_t pseudospectrum;
    rvec_t doas_deg;
};

/**
 * Subspace baseline: sample covariance, eigendecomposition, pseudospectrum
 * 1/||E_n^H d(theta)||^2 on a fine uniform grid over [lo_deg, hi_deg].
 * Throws RankDeficient when fewer than k eigenvalues exceed
 * 1e-8 * trace / MN.
 */
MusicResult music_spectrum(const cmat_t& r, const ArrayConfig& cfg, scalar_t lo_deg,
                           scalar_t hi_deg, index_t k, scalar_t fine_step_deg);

/// As music_spectrum, returning the picked angles only.
rvec_t music_estimate(const cmat_t& r, const ArrayConfig& cfg, scalar_t lo_deg,
                      scalar_t hi_deg, index_t k, scalar_t fine_step_deg);

/// Overload taking the detection range from the snapshots' grid.
rvec_t music_estimate(const Snapshots& snaps, index_t k, scalar_t fine_step_deg);

/**
 * 10*log10 of the squared L2 angle error in radians, association by sorted
 * order. Returns -infinity on exact recovery. Throws LengthMismatch.
 */
scalar_t error_metric(const rvec_t& est_deg, const rvec_t& true_deg);

}  // namespace cdoa
