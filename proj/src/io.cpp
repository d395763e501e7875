// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#include "cdoa/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace cdoa {

namespace {

json cx_to_json(const cx_t& v) { return json::array({v.real(), v.imag()}); }

cx_t cx_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw std::invalid_argument("expected a two-element [re, im] array");
    }
    return {j[0].get<scalar_t>(), j[1].get<scalar_t>()};
}

// +-infinity is not representable in JSON numbers; fall back to strings.
json real_to_json(scalar_t v) {
    if (std::isfinite(v)) {
        return v;
    }
    return v > 0 ? "inf" : "-inf";
}

scalar_t real_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<scalar_t>::infinity();
        if (s == "-inf") return -std::numeric_limits<scalar_t>::infinity();
        throw std::invalid_argument("unrecognized numeric string: " + s);
    }
    return j.get<scalar_t>();
}

}  // namespace

json cvec_to_json(const cvec_t& v) {
    json arr = json::array();
    for (index_t i = 0; i < v.size(); ++i) {
        arr.push_back(cx_to_json(v(i)));
    }
    return arr;
}

cvec_t cvec_from_json(const json& j) {
    cvec_t v(j.size());
    for (index_t i = 0; i < v.size(); ++i) {
        v(i) = cx_from_json(j[static_cast<std::size_t>(i)]);
    }
    return v;
}

json cmat_to_json(const cmat_t& m) {
    json rows = json::array();
    for (index_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (index_t k = 0; k < m.cols(); ++k) {
            row.push_back(cx_to_json(m(i, k)));
        }
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

cmat_t cmat_from_json(const json& j) {
    const auto rows = j.at("rows").get<index_t>();
    const auto cols = j.at("cols").get<index_t>();
    const json& data = j.at("data");
    if (static_cast<index_t>(data.size()) != rows) {
        throw std::invalid_argument("matrix row count does not match data");
    }
    cmat_t m(rows, cols);
    for (index_t i = 0; i < rows; ++i) {
        const json& row = data[static_cast<std::size_t>(i)];
        if (static_cast<index_t>(row.size()) != cols) {
            throw std::invalid_argument("matrix column count does not match data");
        }
        for (index_t k = 0; k < cols; ++k) {
            m(i, k) = cx_from_json(row[static_cast<std::size_t>(k)]);
        }
    }
    return m;
}

json rvec_to_json(const rvec_t& v) {
    json arr = json::array();
    for (index_t i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

rvec_t rvec_from_json(const json& j) {
    rvec_t v(j.size());
    for (index_t i = 0; i < v.size(); ++i) {
        v(i) = j[static_cast<std::size_t>(i)].get<scalar_t>();
    }
    return v;
}

json scene_config_to_json(const SceneConfig& cfg) {
    return json{
        {"k_targets", cfg.k_targets},
        {"p_pulses", cfg.p_pulses},
        {"snr_db", real_to_json(cfg.snr_db)},
        {"coupling_db", cfg.coupling_db},
        {"min_sep_deg", cfg.min_sep_deg},
        {"seed", cfg.seed},
        {"array",
         {{"m_tx", cfg.array.m_tx},
          {"n_rx", cfg.array.n_rx},
          {"d_tx", cfg.array.d_tx},
          {"d_rx", cfg.array.d_rx}}},
        {"grid", {{"angles_deg", rvec_to_json(cfg.grid.angles_deg)},
                  {"step_deg", cfg.grid.step_deg}}},
    };
}

SceneConfig scene_config_from_json(const json& j) {
    SceneConfig cfg;
    if (j.contains("k_targets")) cfg.k_targets = j.at("k_targets").get<index_t>();
    if (j.contains("p_pulses")) cfg.p_pulses = j.at("p_pulses").get<index_t>();
    if (j.contains("snr_db")) cfg.snr_db = real_from_json(j.at("snr_db"));
    if (j.contains("coupling_db")) cfg.coupling_db = j.at("coupling_db").get<scalar_t>();
    if (j.contains("min_sep_deg")) cfg.min_sep_deg = j.at("min_sep_deg").get<scalar_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("array")) {
        const json& a = j.at("array");
        if (a.contains("m_tx")) cfg.array.m_tx = a.at("m_tx").get<index_t>();
        if (a.contains("n_rx")) cfg.array.n_rx = a.at("n_rx").get<index_t>();
        if (a.contains("d_tx")) cfg.array.d_tx = a.at("d_tx").get<scalar_t>();
        if (a.contains("d_rx")) cfg.array.d_rx = a.at("d_rx").get<scalar_t>();
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        const scalar_t step = g.at("step_deg").get<scalar_t>();
        if (g.contains("angles_deg")) {
            cfg.grid.angles_deg = rvec_from_json(g.at("angles_deg"));
            cfg.grid.step_deg = step;
            cfg.grid.validate();
        } else {
            const json& range = g.at("range_deg");
            cfg.grid = Grid::uniform(range.at(0).get<scalar_t>(),
                                     range.at(1).get<scalar_t>(), step);
        }
    }
    cfg.validate();
    return cfg;
}

json scene_to_json(const Scene& scene) {
    return json{
        {"thetas_deg", rvec_to_json(scene.thetas_deg)},
        {"gamma", cmat_to_json(scene.gamma)},
        {"c_tx", cvec_to_json(scene.c_tx)},
        {"c_rx", cvec_to_json(scene.c_rx)},
        {"noise_var", scene.noise_var},
    };
}

Scene scene_from_json(const json& j) {
    Scene scene;
    scene.thetas_deg = rvec_from_json(j.at("thetas_deg"));
    scene.gamma = cmat_from_json(j.at("gamma"));
    scene.c_tx = cvec_from_json(j.at("c_tx"));
    scene.c_rx = cvec_from_json(j.at("c_rx"));
    scene.noise_var = j.at("noise_var").get<scalar_t>();
    return scene;
}

json snapshots_to_json(const Snapshots& snaps) {
    return json{
        {"scene", scene_to_json(snaps.scene)},
        {"config", scene_config_to_json(snaps.config)},
        {"r", cmat_to_json(snaps.r)},
    };
}

Snapshots snapshots_from_json(const json& j) {
    Snapshots snaps;
    snaps.scene = scene_from_json(j.at("scene"));
    snaps.config = scene_config_from_json(j.at("config"));
    snaps.r = cmat_from_json(j.at("r"));
    if (snaps.r.rows() != snaps.config.array.mn() ||
        snaps.r.cols() != snaps.config.p_pulses) {
        throw std::invalid_argument("snapshots: r dimensions do not match config");
    }
    return snaps;
}

json estimate_to_json(const EstimateResult& result, const rvec_t& angles_deg) {
    json trace = json::array();
    for (scalar_t v : result.trace) {
        trace.push_back(real_to_json(v));
    }
    json state{
        {"mu", cmat_to_json(result.state.mu)},
        {"sigma_x", cmat_to_json(result.state.sigma_x)},
        {"beta", rvec_to_json(result.state.beta)},
        {"alpha_n", result.state.alpha_n},
        {"c_tx", cvec_to_json(result.state.c_tx)},
        {"c_rx", cvec_to_json(result.state.c_rx)},
        {"vartheta_tx", rvec_to_json(result.state.vartheta_tx)},
        {"vartheta_rx", rvec_to_json(result.state.vartheta_rx)},
        {"nu_deg", rvec_to_json(result.state.nu_deg)},
        {"iter", result.state.iter},
        {"lambda", real_to_json(result.state.lambda)},
    };
    return json{
        {"spectrum", rvec_to_json(result.spectrum)},
        {"angles_deg", rvec_to_json(angles_deg)},
        {"doas_deg", rvec_to_json(result.doas_deg)},
        {"trace", std::move(trace)},
        {"converged", result.converged},
        {"state", std::move(state)},
    };
}

EstimateResult estimate_from_json(const json& j) {
    EstimateResult result;
    result.spectrum = rvec_from_json(j.at("spectrum"));
    result.doas_deg = rvec_from_json(j.at("doas_deg"));
    result.converged = j.at("converged").get<bool>();
    for (const json& v : j.at("trace")) {
        result.trace.push_back(real_from_json(v));
    }
    const json& s = j.at("state");
    result.state.mu = cmat_from_json(s.at("mu"));
    result.state.sigma_x = cmat_from_json(s.at("sigma_x"));
    result.state.beta = rvec_from_json(s.at("beta"));
    result.state.alpha_n = s.at("alpha_n").get<scalar_t>();
    result.state.c_tx = cvec_from_json(s.at("c_tx"));
    result.state.c_rx = cvec_from_json(s.at("c_rx"));
    result.state.vartheta_tx = rvec_from_json(s.at("vartheta_tx"));
    result.state.vartheta_rx = rvec_from_json(s.at("vartheta_rx"));
    result.state.nu_deg = rvec_from_json(s.at("nu_deg"));
    result.state.iter = s.at("iter").get<index_t>();
    result.state.lambda = real_from_json(s.at("lambda"));
    return result;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << j.dump(1) << "\n";
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config or data file: " + path);
    }
    json j;
    in >> j;
    return j;
}

std::string format_double(scalar_t v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_spectrum_csv(const std::string& path, const rvec_t& angles_deg,
                        const rvec_t& power) {
    if (angles_deg.size() != power.size()) {
        throw LengthMismatch("write_spectrum_csv: column length mismatch");
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "angle_deg,power\n";
    for (index_t i = 0; i < angles_deg.size(); ++i) {
        out << format_double(angles_deg(i)) << "," << format_double(power(i)) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace cdoa
