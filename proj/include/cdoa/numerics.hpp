// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <random>

#include "cdoa/types.hpp"

namespace cdoa {

/** Deterministic generator used by everything that draws randomness. */
using rng_t = std::mt19937_64;

/// Kronecker product. Entry ((i1*b.rows+i2),(j1*b.cols+j2)) = a(i1,j1)*b(i2,j2).
cmat_t kron(const cmat_t& a, const cmat_t& b);

/// Kronecker product of column vectors (length a.len*b.len).
cvec_t kron(const cvec_t& a, const cvec_t& b);

/// Column-stacking: vec(A)(i + j*rows) = A(i,j).
cvec_t vec(const cmat_t& a);

/**
 * Square symmetric (not Hermitian) Toeplitz matrix from its first row:
 * entry (m,m') = first_row(|m-m'|).
 */
cmat_t toeplitz_symmetric(const cvec_t& first_row);

/**
 * Solve a*x = b through a partial-pivoted LU factorization.
 *
 * Throws SingularMatrix when any pivot magnitude falls at or below
 * 1e-13 * ||a||_F.
 */
cvec_t solve(const cmat_t& a, const cvec_t& b);

/// Multi-RHS overload; columns of b solved against the same factorization.
cmat_t solve(const cmat_t& a, const cmat_t& b);

/// Real-matrix overload with the same pivot rule.
rvec_t solve(const rmat_t& a, const rvec_t& b);

/**
 * Length-len vector of i.i.d. circularly symmetric complex Gaussians with
 * total per-entry variance `variance` (variance/2 per real and imaginary
 * part).
 */
cvec_t sample_cgauss(rng_t& rng, index_t len, scalar_t variance);

}  // namespace cdoa
