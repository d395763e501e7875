// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <cstdint>

#include "cdoa/array_model.hpp"
#include "cdoa/numerics.hpp"

namespace cdoa {

/** Everything needed to generate one ground-truth scene. */
struct SceneConfig {
    index_t k_targets = 3;
    index_t p_pulses = 100;
    scalar_t snr_db = 20.0;
    scalar_t coupling_db = -5.0;  ///< adjacent-antenna coupling magnitude, dB
    scalar_t min_sep_deg = 9.67;
    std::uint64_t seed = 1;
    ArrayConfig array;
    Grid grid = Grid::uniform(-80.0, 80.0, 2.0);

    void validate() const;
};

/**
 * Ground truth for one trial. noise_var is filled in by synthesize() (it
 * depends on the realized signal energy); it is 0 on a freshly generated
 * scene.
 */
struct Scene {
    rvec_t thetas_deg;  ///< K target angles, sorted ascending
    cmat_t gamma;       ///< K x P scattering coefficients
    cvec_t c_tx;        ///< length M, c_tx(0) = 1
    cvec_t c_rx;        ///< length N, c_rx(0) = 1
    scalar_t noise_var = 0.0;
};

/** Received pulse matrix plus the truth that produced it. */
struct Snapshots {
    cmat_t r;  ///< MN x P
    Scene scene;
    SceneConfig config;
};

/**
 * Draw K target angles: each is an interior grid point plus a uniform
 * offset in (-step/2, step/2), with pairwise separation >= min_sep_deg
 * enforced by rejection. Throws InfeasibleScene after 1e4 rejections.
 * Returned sorted ascending.
 */
rvec_t gen_targets(const SceneConfig& cfg, rng_t& rng);

/// K x P i.i.d. circularly symmetric unit-variance complex Gaussians.
cmat_t gen_gamma(const SceneConfig& cfg, rng_t& rng);

/**
 * Coupling vector: entry 0 = 1; entry m >= 1 has magnitude
 * 10^(coupling_db/20)^m (geometric decay) and independent uniform phase.
 */
cvec_t gen_coupling(index_t len, scalar_t coupling_db, rng_t& rng);

/**
 * Compose a scene with a fixed draw order: targets, gamma, c_tx, c_rx.
 * noise_var is left at 0 until synthesize().
 */
Scene gen_scene(const SceneConfig& cfg, rng_t& rng);

/**
 * Synthesize the received pulse matrix: noiseless column p is
 * sum_k gamma(k,p) * phi(theta_k) * (c_rx kron c_tx), plus white complex
 * Gaussian noise whose per-entry variance realizes cfg.snr_db against the
 * noiseless Frobenius energy averaged over all MN*P entries.
 * snr_db = +infinity means no noise. The returned Snapshots carries a scene
 * copy with noise_var filled in.
 */
Snapshots synthesize(const Scene& scene, const SceneConfig& cfg, rng_t& rng);

/// The whole pipeline as a pure function of (cfg, cfg.seed).
Snapshots make_snapshots(const SceneConfig& cfg);

}  // namespace cdoa
