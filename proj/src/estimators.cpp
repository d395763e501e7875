// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.
//
// Peak picking, the subspace baseline and the angle error metric.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cdoa/estimators.hpp"

namespace cdoa {

rvec_t peak_pick(const rvec_t& spectrum, const rvec_t& angles_deg, index_t k) {
    const index_t n = spectrum.size();
    if (angles_deg.size() != n) {
        throw LengthMismatch("peak_pick: spectrum and angles differ in length");
    }
    if (k < 1 || k > n) {
        throw std::invalid_argument("peak_pick: need 1 <= k <= spectrum length");
    }

    std::vector<index_t> peaks;
    std::vector<index_t> rest;
    for (index_t i = 0; i < n; ++i) {
        const bool up_left = (i == 0) || spectrum(i) > spectrum(i - 1);
        const bool up_right = (i == n - 1) || spectrum(i) > spectrum(i + 1);
        (up_left && up_right ? peaks : rest).push_back(i);
    }
    const auto by_value_then_index = [&](index_t a, index_t b) {
        if (spectrum(a) != spectrum(b)) {
            return spectrum(a) > spectrum(b);
        }
        return a < b;
    };
    std::sort(peaks.begin(), peaks.end(), by_value_then_index);
    std::sort(rest.begin(), rest.end(), by_value_then_index);

    std::vector<scalar_t> chosen;
    for (index_t i : peaks) {
        if (static_cast<index_t>(chosen.size()) == k) break;
        chosen.push_back(angles_deg(i));
    }
    for (index_t i : rest) {
        if (static_cast<index_t>(chosen.size()) == k) break;
        chosen.push_back(angles_deg(i));
    }
    std::sort(chosen.begin(), chosen.end());
    return Eigen::Map<const rvec_t>(chosen.data(), chosen.size());
}

namespace {

struct MusicScan {
    rvec_t angles_deg;
    rvec_t pseudospectrum;
};

MusicScan music_scan(const cmat_t& r, const ArrayConfig& cfg, scalar_t lo_deg,
                     scalar_t hi_deg, index_t k, scalar_t fine_step_deg) {
    const index_t mn = cfg.mn();
    if (k >= mn) {
        throw std::invalid_argument("music: need k < MN");
    }
    if (r.rows() != mn || r.cols() < 1) {
        throw LengthMismatch("music: snapshot dimensions do not match array");
    }
    const auto p = static_cast<scalar_t>(r.cols());
    const cmat_t cov = (r * r.adjoint()) / p;

    Eigen::SelfAdjointEigenSolver<cmat_t> es(cov);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("music: eigendecomposition failed");
    }
    const scalar_t threshold = 1e-8 * cov.trace().real() / static_cast<scalar_t>(mn);
    const index_t significant = (es.eigenvalues().array() > threshold).count();
    if (significant < k) {
        throw RankDeficient("music: fewer than k significant eigenvalues");
    }
    const cmat_t noise_basis = es.eigenvectors().leftCols(mn - k);

    std::vector<scalar_t> grid;
    for (index_t i = 0;; ++i) {
        const scalar_t ang = lo_deg + static_cast<scalar_t>(i) * fine_step_deg;
        if (ang > hi_deg + 1e-9) break;
        grid.push_back(ang);
    }

    MusicScan scan;
    scan.angles_deg = Eigen::Map<const rvec_t>(grid.data(), grid.size());
    scan.pseudospectrum.resize(scan.angles_deg.size());
    for (index_t i = 0; i < scan.angles_deg.size(); ++i) {
        const cvec_t d = kron(steering_rx(scan.angles_deg(i), cfg),
                              steering_tx(scan.angles_deg(i), cfg));
        scan.pseudospectrum(i) = 1.0 / (noise_basis.adjoint() * d).squaredNorm();
    }
    return scan;
}

}  // namespace

MusicResult music_spectrum(const cmat_t& r, const ArrayConfig& cfg, scalar_t lo_deg,
                           scalar_t hi_deg, index_t k, scalar_t fine_step_deg) {
    MusicScan scan = music_scan(r, cfg, lo_deg, hi_deg, k, fine_step_deg);
    MusicResult result;
    result.doas_deg = peak_pick(scan.pseudospectrum, scan.angles_deg, k);
    result.angles_deg = std::move(scan.angles_deg);
    result.pseudospectrum = std::move(scan.pseudospectrum);
    return result;
}

rvec_t music_estimate(const cmat_t& r, const ArrayConfig& cfg, scalar_t lo_deg,
                      scalar_t hi_deg, index_t k, scalar_t fine_step_deg) {
    const MusicScan scan = music_scan(r, cfg, lo_deg, hi_deg, k, fine_step_deg);
    return peak_pick(scan.pseudospectrum, scan.angles_deg, k);
}

rvec_t music_estimate(const Snapshots& snaps, index_t k, scalar_t fine_step_deg) {
    return music_estimate(snaps.r, snaps.config.array, snaps.config.grid.lo_deg(),
                          snaps.config.grid.hi_deg(), k, fine_step_deg);
}

scalar_t error_metric(const rvec_t& est_deg, const rvec_t& true_deg) {
    if (est_deg.size() != true_deg.size()) {
        throw LengthMismatch("error_metric: estimate and truth differ in length");
    }
    const rvec_t diff_rad = (est_deg - true_deg) * (kPi / 180.0);
    const scalar_t sq = diff_rad.squaredNorm();
    if (sq == 0.0) {
        return -std::numeric_limits<scalar_t>::infinity();
    }
    return 10.0 * std::log10(sq);
}

}  // namespace cdoa
