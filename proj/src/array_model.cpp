// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#include "cdoa/array_model.hpp"

#include <cmath>

#include "cdoa/numerics.hpp"

namespace cdoa {

void ArrayConfig::validate() const {
    if (m_tx < 2 || n_rx < 2) {
        throw std::invalid_argument("ArrayConfig: need m_tx >= 2 and n_rx >= 2");
    }
    if (!(d_tx > 0.0) || !(d_rx > 0.0)) {
        throw std::invalid_argument("ArrayConfig: spacings must be positive");
    }
}

Grid Grid::uniform(scalar_t lo_deg, scalar_t hi_deg, scalar_t step_deg) {
    if (!(step_deg > 0.0) || !(hi_deg > lo_deg)) {
        throw std::invalid_argument("Grid: need step > 0 and hi > lo");
    }
    const auto count = static_cast<index_t>(std::llround((hi_deg - lo_deg) / step_deg)) + 1;
    Grid g;
    g.step_deg = step_deg;
    g.angles_deg.resize(count);
    for (index_t u = 0; u < count; ++u) {
        g.angles_deg(u) = lo_deg + static_cast<scalar_t>(u) * step_deg;
    }
    g.validate();
    return g;
}

void Grid::validate() const {
    if (size() < 2) {
        throw std::invalid_argument("Grid: need at least two points");
    }
    for (index_t u = 1; u < size(); ++u) {
        if (std::abs(angles_deg(u) - angles_deg(u - 1) - step_deg) > 1e-9) {
            throw std::invalid_argument("Grid: spacing is not uniform");
        }
    }
}

cvec_t steering(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths) {
    const scalar_t s = std::sin(deg2rad(theta_deg));
    cvec_t a(size);
    for (index_t m = 0; m < size; ++m) {
        const scalar_t phase = 2.0 * kPi * static_cast<scalar_t>(m) * spacing_wavelengths * s;
        a(m) = cx_t(std::cos(phase), std::sin(phase));
    }
    return a;
}

cvec_t steering_tx(scalar_t theta_deg, const ArrayConfig& cfg) {
    return steering(theta_deg, cfg.m_tx, cfg.d_tx);
}

cvec_t steering_rx(scalar_t theta_deg, const ArrayConfig& cfg) {
    return steering(theta_deg, cfg.n_rx, cfg.d_rx);
}

cmat_t coupling_matrix(const cvec_t& c) {
    if (c.size() < 1 || c(0) != cx_t(1.0, 0.0)) {
        throw InvalidCoupling("coupling_matrix: first entry must be exactly 1");
    }
    return toeplitz_symmetric(c);
}

namespace {

// Q1 + Q2 assembled from an arbitrary length-`size` vector v.
cmat_t q_from_vector(const cvec_t& v) {
    const index_t size = v.size();
    cmat_t q = cmat_t::Zero(size, size);
    for (index_t p = 0; p < size; ++p) {
        for (index_t col = 0; col < size; ++col) {
            if (p + col <= size - 1) {
                q(p, col) += v(p + col);
            }
            if (p >= col && col >= 1) {
                q(p, col) += v(p - col);
            }
        }
    }
    return q;
}

}  // namespace

cmat_t q_matrix(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths) {
    if (size < 2) {
        throw std::invalid_argument("q_matrix: need size >= 2");
    }
    return q_from_vector(steering(theta_deg, size, spacing_wavelengths));
}

cmat_t q_matrix_deriv(scalar_t theta_deg, index_t size, scalar_t spacing_wavelengths) {
    if (size < 2) {
        throw std::invalid_argument("q_matrix_deriv: need size >= 2");
    }
    const scalar_t theta = deg2rad(theta_deg);
    const cvec_t a = steering(theta_deg, size, spacing_wavelengths);
    cvec_t da(size);
    for (index_t m = 0; m < size; ++m) {
        const scalar_t rate = 2.0 * kPi * static_cast<scalar_t>(m) * spacing_wavelengths * std::cos(theta);
        da(m) = cx_t(0.0, rate) * a(m);
    }
    return q_from_vector(da);
}

cmat_t phi(scalar_t zeta_deg, const ArrayConfig& cfg) {
    return kron(q_matrix(zeta_deg, cfg.n_rx, cfg.d_rx),
                q_matrix(zeta_deg, cfg.m_tx, cfg.d_tx));
}

cmat_t omega(scalar_t zeta_deg, const ArrayConfig& cfg) {
    const cmat_t qa = q_matrix(zeta_deg, cfg.m_tx, cfg.d_tx);
    const cmat_t qb = q_matrix(zeta_deg, cfg.n_rx, cfg.d_rx);
    const cmat_t qa_d = q_matrix_deriv(zeta_deg, cfg.m_tx, cfg.d_tx);
    const cmat_t qb_d = q_matrix_deriv(zeta_deg, cfg.n_rx, cfg.d_rx);
    return kron(qb, qa_d) + kron(qb_d, qa);
}

Dictionary build_dictionary(const Grid& grid, const ArrayConfig& cfg) {
    cfg.validate();
    grid.validate();
    if (grid.lo_deg() <= -90.0 || grid.hi_deg() >= 90.0) {
        throw std::invalid_argument("build_dictionary: grid must lie inside (-90, 90) degrees");
    }
    Dictionary dict;
    dict.grid = grid;
    dict.array = cfg;
    const index_t mn = cfg.mn();
    const index_t u_count = grid.size();
    dict.psi.resize(mn, u_count * mn);
    dict.xi.resize(mn, u_count * mn);
    for (index_t u = 0; u < u_count; ++u) {
        dict.psi.middleCols(u * mn, mn) = phi(grid.angles_deg(u), cfg);
        dict.xi.middleCols(u * mn, mn) = omega(grid.angles_deg(u), cfg);
    }
    return dict;
}

cmat_t upsilon(const Dictionary& dict, const rvec_t& nu_deg) {
    const index_t u_count = dict.u_count();
    if (nu_deg.size() != u_count) {
        throw LengthMismatch("upsilon: nu length must equal grid size");
    }
    const scalar_t half = dict.grid.step_deg / 2.0;
    for (index_t u = 0; u < u_count; ++u) {
        if (std::abs(nu_deg(u)) > half + 1e-12) {
            throw OffsetOutOfRange("upsilon: |nu| exceeds step/2");
        }
    }
    cmat_t ups = dict.psi;
    const index_t mn = dict.mn();
    for (index_t u = 0; u < u_count; ++u) {
        if (nu_deg(u) != 0.0) {
            ups.middleCols(u * mn, mn) += deg2rad(nu_deg(u)) * dict.xi_block(u);
        }
    }
    return ups;
}

}  // namespace cdoa
