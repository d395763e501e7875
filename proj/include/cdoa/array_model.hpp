// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include "cdoa/types.hpp"

namespace cdoa {

/** Geometry and dimensioning of the colocated MIMO array. */
struct ArrayConfig {
    index_t m_tx = 10;    ///< transmit antennas
    index_t n_rx = 5;     ///< receive antennas
    scalar_t d_tx = 0.5;  ///< transmit spacing, in wavelengths
    scalar_t d_rx = 0.5;  ///< receive spacing, in wavelengths

    index_t mn() const { return m_tx * n_rx; }
    void validate() const;
};

/** Uniform angular grid over the detection range, in degrees. */
struct Grid {
    rvec_t angles_deg;  ///< strictly increasing, uniformly spaced
    scalar_t step_deg = 0.0;

    static Grid uniform(scalar_t lo_deg, scalar_t hi_deg, scalar_t step_deg);

    index_t size() const { return angles_deg.size(); }
    scalar_t lo_deg() const { return angles_deg(0); }
    scalar_t hi_deg() const { return angles_deg(angles_deg.size() - 1); }
    void validate() const;
};

/**
 * On-grid atoms and their angle derivatives for every grid point, stored as
 * horizontal block concatenations (block u occupies columns [u*MN, (u+1)*MN)).
 */
struct Dictionary {
    cmat_t psi;  ///< MN x U*MN, block u = phi(zeta_u)
    cmat_t xi;   ///< MN x U*MN, block u = omega(zeta_u), derivative per radian
    Grid grid;
    ArrayConfig array;

    index_t mn() const { return array.mn(); }
    index_t u_count() const { return grid.size(); }

    auto psi_block(index_t u) const { return psi.middleCols(u * mn(), mn()); }
    auto xi_block(index_t u) const { return xi.middleCols(u * mn(), mn()); }
};

/// Unit-modulus phase progression [1, e^{j2pi d sin(theta)}, ...] of length `size`.
cvec_t steering(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths);

/// Transmit steering vector (length M).
cvec_t steering_tx(scalar_t theta_deg, const ArrayConfig& cfg);

/// Receive steering vector (length N).
cvec_t steering_rx(scalar_t theta_deg, const ArrayConfig& cfg);

/**
 * Symmetric Toeplitz mutual-coupling matrix from its first row c.
 * Throws InvalidCoupling unless c(0) = 1.
 */
cmat_t coupling_matrix(const cvec_t& c);

/**
 * The Q-matrix that linearizes coupling: for the steering vector a at
 * theta, coupling_matrix(c)*a = q_matrix(theta)*c for any coupling vector c.
 * Q = Q1 + Q2 with Q1(p,q) = a(p+q) for p+q <= size-1, and
 * Q2(p,q) = a(p-q) for p >= q >= 1; zero elsewhere.
 */
cmat_t q_matrix(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths);

/**
 * Analytic angle derivative of q_matrix, taken with respect to radians:
 * each steering entry a_m is replaced by j*2pi*m*spacing*cos(theta)*a_m.
 */
cmat_t q_matrix_deriv(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths);

/// Per-angle atom Phi(zeta) = Q_b(zeta) kron Q_a(zeta), shape MN x MN.
cmat_t phi(scalar_t zeta_deg, const ArrayConfig& cfg);

/// Atom derivative Omega = Q_b kron Q_a' + Q_b' kron Q_a (per radian).
cmat_t omega(scalar_t zeta_deg, const ArrayConfig& cfg);

/// Assemble the dictionary pair (psi, xi) over the whole grid.
Dictionary build_dictionary(const Grid& grid, const ArrayConfig& cfg);

/**
 * Offset-perturbed operator: block u = psi_u + nu_rad(u)*xi_u, with nu given
 * in degrees and converted to radians here (the one unit boundary).
 * Throws OffsetOutOfRange when any |nu_deg(u)| exceeds step/2 beyond 1e-12.
 */
cmat_t upsilon(const Dictionary& dict, const rvec_t& nu_deg);

}  // namespace cdoa
