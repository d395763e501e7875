// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#include "cdoa/numerics.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace cdoa {

namespace {

// Factor with the shared singularity rule: every pivot must strictly exceed
// 1e-13 * ||a||_F (an all-zero matrix therefore also throws).
template <typename Mat>
Eigen::PartialPivLU<Mat> factor_checked(const Mat& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("solve: matrix must be square");
    }
    Eigen::PartialPivLU<Mat> lu(a);
    const scalar_t floor = 1e-13 * a.norm();
    const auto diag = lu.matrixLU().diagonal();
    for (index_t i = 0; i < diag.size(); ++i) {
        if (!(std::abs(diag(i)) > floor)) {
            throw SingularMatrix("solve: pivot magnitude below 1e-13*||a||_F");
        }
    }
    return lu;
}

}  // namespace

cmat_t kron(const cmat_t& a, const cmat_t& b) {
    return Eigen::kroneckerProduct(a, b);
}

cvec_t kron(const cvec_t& a, const cvec_t& b) {
    return Eigen::kroneckerProduct(a, b);
}

cvec_t vec(const cmat_t& a) {
    return Eigen::Map<const cvec_t>(a.data(), a.size());
}

cmat_t toeplitz_symmetric(const cvec_t& first_row) {
    const index_t n = first_row.size();
    if (n < 1) {
        throw std::invalid_argument("toeplitz_symmetric: need len >= 1");
    }
    cmat_t out(n, n);
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < n; ++j) {
            out(i, j) = first_row(std::abs(i - j));
        }
    }
    return out;
}

cvec_t solve(const cmat_t& a, const cvec_t& b) {
    if (b.size() != a.rows()) {
        throw LengthMismatch("solve: rhs length does not match matrix");
    }
    return factor_checked(a).solve(b);
}

cmat_t solve(const cmat_t& a, const cmat_t& b) {
    if (b.rows() != a.rows()) {
        throw LengthMismatch("solve: rhs rows do not match matrix");
    }
    return factor_checked(a).solve(b);
}

rvec_t solve(const rmat_t& a, const rvec_t& b) {
    if (b.size() != a.rows()) {
        throw LengthMismatch("solve: rhs length does not match matrix");
    }
    return factor_checked(a).solve(b);
}

cvec_t sample_cgauss(rng_t& rng, index_t len, scalar_t variance) {
    if (!(variance > 0.0)) {
        throw std::invalid_argument("sample_cgauss: variance must be > 0");
    }
    std::normal_distribution<scalar_t> gauss(0.0, std::sqrt(variance / 2.0));
    cvec_t out(len);
    for (index_t i = 0; i < len; ++i) {
        const scalar_t re = gauss(rng);
        const scalar_t im = gauss(rng);
        out(i) = cx_t(re, im);
    }
    return out;
}

}  // namespace cdoa
