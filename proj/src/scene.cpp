// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#include "cdoa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdoa {

void SceneConfig::validate() const {
    if (k_targets < 1 || p_pulses < 1) {
        throw std::invalid_argument("SceneConfig: need k_targets >= 1 and p_pulses >= 1");
    }
    if (!(min_sep_deg > 0.0)) {
        throw std::invalid_argument("SceneConfig: min_sep_deg must be positive");
    }
    array.validate();
    grid.validate();
}

rvec_t gen_targets(const SceneConfig& cfg, rng_t& rng) {
    cfg.validate();
    const index_t u_count = cfg.grid.size();
    if (u_count < 3) {
        throw InfeasibleScene("gen_targets: grid has no interior points");
    }
    std::uniform_int_distribution<index_t> pick_u(1, u_count - 2);
    std::uniform_real_distribution<scalar_t> pick_off(-cfg.grid.step_deg / 2.0,
                                                      cfg.grid.step_deg / 2.0);
    std::vector<scalar_t> accepted;
    accepted.reserve(cfg.k_targets);
    long rejections = 0;
    while (static_cast<index_t>(accepted.size()) < cfg.k_targets) {
        const scalar_t cand = cfg.grid.angles_deg(pick_u(rng)) + pick_off(rng);
        const bool ok = std::all_of(accepted.begin(), accepted.end(), [&](scalar_t t) {
            return std::abs(t - cand) >= cfg.min_sep_deg;
        });
        if (ok) {
            accepted.push_back(cand);
        } else if (++rejections >= 10000) {
            throw InfeasibleScene("gen_targets: 1e4 rejections without placing all targets");
        }
    }
    std::sort(accepted.begin(), accepted.end());
    return Eigen::Map<const rvec_t>(accepted.data(), accepted.size());
}

cmat_t gen_gamma(const SceneConfig& cfg, rng_t& rng) {
    const cvec_t draws = sample_cgauss(rng, cfg.k_targets * cfg.p_pulses, 1.0);
    return Eigen::Map<const cmat_t>(draws.data(), cfg.k_targets, cfg.p_pulses);
}

cvec_t gen_coupling(index_t len, scalar_t coupling_db, rng_t& rng) {
    if (len < 2) {
        throw std::invalid_argument("gen_coupling: need len >= 2");
    }
    std::uniform_real_distribution<scalar_t> pick_phase(0.0, 2.0 * kPi);
    const scalar_t adjacent = std::pow(10.0, coupling_db / 20.0);
    cvec_t c(len);
    c(0) = cx_t(1.0, 0.0);
    for (index_t m = 1; m < len; ++m) {
        const scalar_t mag = std::pow(adjacent, static_cast<scalar_t>(m));
        const scalar_t phase = pick_phase(rng);
        c(m) = mag * cx_t(std::cos(phase), std::sin(phase));
    }
    return c;
}

Scene gen_scene(const SceneConfig& cfg, rng_t& rng) {
    Scene scene;
    scene.thetas_deg = gen_targets(cfg, rng);
    scene.gamma = gen_gamma(cfg, rng);
    scene.c_tx = gen_coupling(cfg.array.m_tx, cfg.coupling_db, rng);
    scene.c_rx = gen_coupling(cfg.array.n_rx, cfg.coupling_db, rng);
    return scene;
}

Snapshots synthesize(const Scene& scene, const SceneConfig& cfg, rng_t& rng) {
    const index_t mn = cfg.array.mn();
    const index_t k = scene.thetas_deg.size();
    const index_t p = scene.gamma.cols();
    if (scene.gamma.rows() != k || p != cfg.p_pulses ||
        scene.c_tx.size() != cfg.array.m_tx || scene.c_rx.size() != cfg.array.n_rx) {
        throw LengthMismatch("synthesize: scene dimensions do not match config");
    }

    const cvec_t c = kron(scene.c_rx, scene.c_tx);
    cmat_t atoms(mn, k);
    for (index_t i = 0; i < k; ++i) {
        atoms.col(i) = phi(scene.thetas_deg(i), cfg.array) * c;
    }
    const cmat_t noiseless = atoms * scene.gamma;

    Snapshots snaps;
    snaps.scene = scene;
    snaps.config = cfg;
    if (std::isinf(cfg.snr_db) && cfg.snr_db > 0.0) {
        snaps.scene.noise_var = 0.0;
        snaps.r = noiseless;
        return snaps;
    }
    const scalar_t noise_var =
        noiseless.squaredNorm() /
        (static_cast<scalar_t>(mn * p) * std::pow(10.0, cfg.snr_db / 10.0));
    snaps.scene.noise_var = noise_var;
    const cvec_t noise = sample_cgauss(rng, mn * p, noise_var);
    snaps.r = noiseless + Eigen::Map<const cmat_t>(noise.data(), mn, p);
    return snaps;
}

Snapshots make_snapshots(const SceneConfig& cfg) {
    rng_t rng(cfg.seed);
    const Scene scene = gen_scene(cfg, rng);
    return synthesize(scene, cfg, rng);
}

}  // namespace cdoa
