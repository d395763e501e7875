// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cdoa {

/** Scalar type; all floating point is double precision. */
using scalar_t = double;

/** Complex scalar */
using cx_t = std::complex<scalar_t>;

/** Dense complex matrix */
using cmat_t = Eigen::Matrix<cx_t, Eigen::Dynamic, Eigen::Dynamic>;

/** Dense complex column vector */
using cvec_t = Eigen::Matrix<cx_t, Eigen::Dynamic, 1>;

/** Dense real matrix */
using rmat_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic>;

/** Dense real column vector */
using rvec_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;

using index_t = Eigen::Index;

inline constexpr scalar_t kPi = 3.14159265358979323846;

inline scalar_t deg2rad(scalar_t deg) { return deg * (kPi / 180.0); }
inline scalar_t rad2deg(scalar_t rad) { return rad * (180.0 / kPi); }

/** A pivoted factorization met an effectively zero pivot. */
struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Coupling vector does not satisfy c(0) = 1. */
struct InvalidCoupling : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** An off-grid offset exceeds half the grid step. */
struct OffsetOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Target placement kept violating the minimum separation. */
struct InfeasibleScene : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Two sequences that must match in length do not. */
struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Sample covariance has too few significant eigenvalues. */
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cdoa
