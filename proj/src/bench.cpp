// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#include "cdoa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cdoa/io.hpp"

namespace cdoa {

namespace {

constexpr scalar_t kExactFloorDb = -120.0;

SblMode mode_for(Method m) {
    switch (m) {
        case Method::sblmc: return SblMode::full;
        case Method::ogsbi: return SblMode::no_coupling;
        case Method::bcs: return SblMode::on_grid;
        default: throw std::logic_error("mode_for: not an EM method");
    }
}

index_t worker_count(std::size_t tasks) {
    index_t n = 0;
    if (const char* env = std::getenv("COUPLED_DOA_THREADS")) {
        n = std::strtol(env, nullptr, 10);
    }
    if (n < 1) {
        n = static_cast<index_t>(std::thread::hardware_concurrency());
    }
    if (n < 1) {
        n = 1;
    }
    return std::min<index_t>(n, static_cast<index_t>(tasks));
}

SceneConfig scene_for_value(const ExperimentConfig& cfg, SweepSpec::Axis axis,
                            std::optional<scalar_t> value) {
    SceneConfig scene = cfg.scene;
    if (!value) {
        return scene;
    }
    switch (axis) {
        case SweepSpec::Axis::snr_db:
            scene.snr_db = *value;
            break;
        case SweepSpec::Axis::coupling_db:
            scene.coupling_db = *value;
            break;
        case SweepSpec::Axis::grid_step_deg:
            scene.grid = Grid::uniform(cfg.scene.grid.lo_deg(), cfg.scene.grid.hi_deg(),
                                       *value);
            break;
        case SweepSpec::Axis::none:
            break;
    }
    return scene;
}

TrialReport run_trial_impl(const SceneConfig& scene_cfg, const ExperimentConfig& cfg,
                           const Dictionary& dict, Method method, std::uint64_t seed,
                           std::optional<scalar_t> sweep_value) {
    SceneConfig trial_cfg = scene_cfg;
    trial_cfg.seed = seed;
    const Snapshots snaps = make_snapshots(trial_cfg);

    TrialReport report;
    report.method = method;
    report.sweep_value = sweep_value;
    report.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (method == Method::music) {
            report.doas_deg = music_estimate(snaps, trial_cfg.k_targets,
                                             cfg.music_fine_step_deg);
            report.converged = true;
            report.iters = 0;
        } else {
            const EstimateResult result =
                run_sblmc(snaps, dict, cfg.hyper, trial_cfg.k_targets, mode_for(method));
            report.doas_deg = result.doas_deg;
            report.converged = result.converged;
            report.iters = result.state.iter - 1;
        }
        report.error_db = error_metric(report.doas_deg, snaps.scene.thetas_deg);
    } catch (const InfeasibleScene&) {
        throw;
    } catch (const std::exception&) {
        report.error_db = std::numeric_limits<scalar_t>::infinity();
        report.converged = false;
    }
    report.runtime_s =
        std::chrono::duration<scalar_t>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::sblmc: return "sblmc";
        case Method::ogsbi: return "ogsbi";
        case Method::bcs: return "bcs";
        case Method::music: return "music";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "sblmc") return Method::sblmc;
    if (name == "ogsbi") return Method::ogsbi;
    if (name == "bcs") return Method::bcs;
    if (name == "music") return Method::music;
    return std::nullopt;
}

void ExperimentConfig::validate() const {
    scene.validate();
    hyper.validate();
    if (trials < 1 || methods.empty()) {
        throw std::invalid_argument("ExperimentConfig: need trials >= 1 and methods nonempty");
    }
    if (!(music_fine_step_deg > 0.0)) {
        throw std::invalid_argument("ExperimentConfig: music_fine_step_deg must be > 0");
    }
    if (sweep.axis != SweepSpec::Axis::none) {
        if (sweep.values.empty()) {
            throw std::invalid_argument("ExperimentConfig: sweep axis set without values");
        }
        for (std::size_t i = 1; i < sweep.values.size(); ++i) {
            if (!(sweep.values[i] > sweep.values[i - 1])) {
                throw std::invalid_argument("ExperimentConfig: sweep values must increase");
            }
        }
    }
}

TrialReport run_trial(const ExperimentConfig& cfg, Method method, std::uint64_t seed) {
    cfg.validate();
    const Dictionary dict = build_dictionary(cfg.scene.grid, cfg.scene.array);
    return run_trial_impl(cfg.scene, cfg, dict, method, seed, std::nullopt);
}

std::vector<TrialReport> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<std::optional<scalar_t>> values;
    if (cfg.sweep.axis == SweepSpec::Axis::none) {
        values.push_back(std::nullopt);
    } else {
        for (scalar_t v : cfg.sweep.values) {
            values.push_back(v);
        }
    }

    // one dictionary (and scene template) per sweep value, shared read-only
    std::vector<SceneConfig> scenes;
    std::vector<Dictionary> dicts;
    scenes.reserve(values.size());
    dicts.reserve(values.size());
    for (const auto& v : values) {
        scenes.push_back(scene_for_value(cfg, cfg.sweep.axis, v));
        dicts.push_back(build_dictionary(scenes.back().grid, scenes.back().array));
    }

    struct Task {
        Method method;
        std::size_t value_idx;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (Method method : cfg.methods) {
        for (std::size_t vi = 0; vi < values.size(); ++vi) {
            for (index_t t = 0; t < cfg.trials; ++t) {
                tasks.push_back({method, vi, cfg.scene.seed + static_cast<std::uint64_t>(t)});
            }
        }
    }

    std::vector<TrialReport> reports(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const index_t workers = worker_count(tasks.size());
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            const Task& task = tasks[i];
            try {
                reports[i] = run_trial_impl(scenes[task.value_idx], cfg,
                                            dicts[task.value_idx], task.method, task.seed,
                                            values[task.value_idx]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(tasks.size());
                return;
            }
        }
    };

    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (index_t w = 0; w < workers; ++w) {
            pool.emplace_back(body);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return reports;
}

namespace {

scalar_t quantile(const std::vector<scalar_t>& sorted, scalar_t q) {
    if (sorted.empty()) {
        return std::numeric_limits<scalar_t>::quiet_NaN();
    }
    const scalar_t pos = q * static_cast<scalar_t>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const scalar_t frac = pos - static_cast<scalar_t>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

scalar_t floor_exact(scalar_t error_db) {
    return std::isinf(error_db) && error_db < 0 ? kExactFloorDb : error_db;
}

}  // namespace

Summary aggregate(const std::vector<TrialReport>& reports) {
    if (reports.empty()) {
        throw std::invalid_argument("aggregate: no reports");
    }

    using Key = std::pair<int, scalar_t>;  // method, sweep value (NaN-free sentinel)
    const auto key_of = [](const TrialReport& r) {
        return Key{static_cast<int>(r.method),
                   r.sweep_value ? *r.sweep_value : -std::numeric_limits<scalar_t>::infinity()};
    };

    std::map<Key, std::vector<const TrialReport*>> groups;
    std::vector<Key> order;
    for (const TrialReport& r : reports) {
        const Key key = key_of(r);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) {
            order.push_back(key);
        }
        it->second.push_back(&r);
    }
    std::sort(order.begin(), order.end());

    Summary summary;
    for (const Key& key : order) {
        const auto& group = groups[key];
        std::vector<scalar_t> errs;
        errs.reserve(group.size());
        for (const TrialReport* r : group) {
            errs.push_back(floor_exact(r->error_db));
        }
        std::sort(errs.begin(), errs.end());
        // summed in sorted order so aggregation ignores report order exactly
        scalar_t mean = 0.0;
        for (scalar_t e : errs) {
            mean += e;
        }
        MethodStats st;
        st.method = static_cast<Method>(key.first);
        if (std::isfinite(key.second)) {
            st.sweep_value = key.second;
        }
        st.trials = errs.size();
        st.median_db = quantile(errs, 0.5);
        st.mean_db = mean / static_cast<scalar_t>(errs.size());
        st.p10_db = quantile(errs, 0.1);
        st.p90_db = quantile(errs, 0.9);
        summary.stats.push_back(st);
    }

    // pairwise win rates on matching (sweep value, seed)
    std::vector<Method> methods;
    for (const Key& key : order) {
        const auto m = static_cast<Method>(key.first);
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
            methods.push_back(m);
        }
    }
    std::vector<scalar_t> sweep_keys;
    for (const Key& key : order) {
        if (std::find(sweep_keys.begin(), sweep_keys.end(), key.second) == sweep_keys.end()) {
            sweep_keys.push_back(key.second);
        }
    }
    for (std::size_t ia = 0; ia < methods.size(); ++ia) {
        for (std::size_t ib = ia + 1; ib < methods.size(); ++ib) {
            for (scalar_t sv : sweep_keys) {
                const Key ka{static_cast<int>(methods[ia]), sv};
                const Key kb{static_cast<int>(methods[ib]), sv};
                if (!groups.count(ka) || !groups.count(kb)) {
                    continue;
                }
                std::map<std::uint64_t, scalar_t> err_b;
                for (const TrialReport* r : groups[kb]) {
                    err_b[r->seed] = floor_exact(r->error_db);
                }
                scalar_t wins = 0.0;
                std::size_t pairs = 0;
                for (const TrialReport* r : groups[ka]) {
                    const auto it = err_b.find(r->seed);
                    if (it == err_b.end()) {
                        continue;
                    }
                    ++pairs;
                    const scalar_t ea = floor_exact(r->error_db);
                    if (ea < it->second) {
                        wins += 1.0;
                    } else if (ea == it->second) {
                        wins += 0.5;
                    }
                }
                if (pairs == 0) {
                    continue;
                }
                PairStats ps;
                ps.a = methods[ia];
                ps.b = methods[ib];
                if (std::isfinite(sv)) {
                    ps.sweep_value = sv;
                }
                ps.win_rate_a = wins / static_cast<scalar_t>(pairs);
                ps.pairs = pairs;
                summary.pairs.push_back(ps);
            }
        }
    }
    return summary;
}

json experiment_to_json(const ExperimentConfig& cfg) {
    json methods = json::array();
    for (Method m : cfg.methods) {
        methods.push_back(method_name(m));
    }
    json j{
        {"scene", scene_config_to_json(cfg.scene)},
        {"hyper",
         {{"a", cfg.hyper.a},
          {"b", cfg.hyper.b},
          {"c", cfg.hyper.c},
          {"d", cfg.hyper.d},
          {"e1", cfg.hyper.e1},
          {"f1", cfg.hyper.f1},
          {"e2", cfg.hyper.e2},
          {"f2", cfg.hyper.f2},
          {"n_iter_max", cfg.hyper.n_iter_max},
          {"lambda_th", cfg.hyper.lambda_th}}},
        {"methods", std::move(methods)},
        {"trials", cfg.trials},
        {"music_fine_step_deg", cfg.music_fine_step_deg},
    };
    if (cfg.sweep.axis != SweepSpec::Axis::none) {
        const char* axis = cfg.sweep.axis == SweepSpec::Axis::snr_db ? "snr_db"
                           : cfg.sweep.axis == SweepSpec::Axis::coupling_db
                               ? "coupling_db"
                               : "grid_step_deg";
        j["sweep"] = {{"axis", axis}, {"values", cfg.sweep.values}};
    }
    if (!cfg.output_path.empty()) {
        j["output_path"] = cfg.output_path;
    }
    return j;
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("scene")) {
        cfg.scene = scene_config_from_json(j.at("scene"));
    }
    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        if (h.contains("a")) cfg.hyper.a = h.at("a").get<scalar_t>();
        if (h.contains("b")) cfg.hyper.b = h.at("b").get<scalar_t>();
        if (h.contains("c")) cfg.hyper.c = h.at("c").get<scalar_t>();
        if (h.contains("d")) cfg.hyper.d = h.at("d").get<scalar_t>();
        if (h.contains("e1")) cfg.hyper.e1 = h.at("e1").get<scalar_t>();
        if (h.contains("f1")) cfg.hyper.f1 = h.at("f1").get<scalar_t>();
        if (h.contains("e2")) cfg.hyper.e2 = h.at("e2").get<scalar_t>();
        if (h.contains("f2")) cfg.hyper.f2 = h.at("f2").get<scalar_t>();
        if (h.contains("n_iter_max")) cfg.hyper.n_iter_max = h.at("n_iter_max").get<index_t>();
        if (h.contains("lambda_th")) cfg.hyper.lambda_th = h.at("lambda_th").get<scalar_t>();
    }
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const json& name : j.at("methods")) {
            const auto m = method_from_name(name.get<std::string>());
            if (!m) {
                throw std::invalid_argument("unknown method: " + name.get<std::string>());
            }
            cfg.methods.push_back(*m);
        }
    }
    if (j.contains("trials")) {
        cfg.trials = j.at("trials").get<index_t>();
    }
    if (j.contains("music_fine_step_deg")) {
        cfg.music_fine_step_deg = j.at("music_fine_step_deg").get<scalar_t>();
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        const auto axis = s.at("axis").get<std::string>();
        if (axis == "snr_db") {
            cfg.sweep.axis = SweepSpec::Axis::snr_db;
        } else if (axis == "coupling_db") {
            cfg.sweep.axis = SweepSpec::Axis::coupling_db;
        } else if (axis == "grid_step_deg") {
            cfg.sweep.axis = SweepSpec::Axis::grid_step_deg;
        } else {
            throw std::invalid_argument("unknown sweep axis: " + axis);
        }
        for (const json& v : s.at("values")) {
            cfg.sweep.values.push_back(v.get<scalar_t>());
        }
    }
    if (j.contains("output_path")) {
        cfg.output_path = j.at("output_path").get<std::string>();
    }
    cfg.validate();
    return cfg;
}

namespace {

std::string error_to_csv(scalar_t error_db) {
    if (std::isinf(error_db)) {
        return error_db < 0 ? "exact" : "inf";
    }
    return format_double(error_db);
}

scalar_t error_from_csv(const std::string& s) {
    if (s == "exact") {
        return -std::numeric_limits<scalar_t>::infinity();
    }
    if (s == "inf") {
        return std::numeric_limits<scalar_t>::infinity();
    }
    return std::stod(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    return out;
}

}  // namespace

void write_reports_csv(const std::string& path, const std::vector<TrialReport>& reports) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "method,sweep_value,seed,error_db,converged,iters,runtime_s\n";
    for (const TrialReport& r : reports) {
        out << method_name(r.method) << ","
            << (r.sweep_value ? format_double(*r.sweep_value) : "") << "," << r.seed << ","
            << error_to_csv(r.error_db) << "," << (r.converged ? 1 : 0) << "," << r.iters
            << "," << format_double(r.runtime_s) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::vector<TrialReport> parse_reports_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open reports file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("empty reports file: " + path);
    }
    std::vector<TrialReport> reports;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 7) {
            throw std::invalid_argument("malformed reports row: " + line);
        }
        TrialReport r;
        const auto m = method_from_name(fields[0]);
        if (!m) {
            throw std::invalid_argument("unknown method in reports: " + fields[0]);
        }
        r.method = *m;
        if (!fields[1].empty()) {
            r.sweep_value = std::stod(fields[1]);
        }
        r.seed = std::stoull(fields[2]);
        r.error_db = error_from_csv(fields[3]);
        r.converged = fields[4] == "1";
        r.iters = std::stol(fields[5]);
        r.runtime_s = std::stod(fields[6]);
        reports.push_back(std::move(r));
    }
    return reports;
}

void write_summary_csv(const std::string& path, const Summary& summary) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "method,sweep_value,trials,median_db,mean_db,p10_db,p90_db\n";
    for (const MethodStats& st : summary.stats) {
        out << method_name(st.method) << ","
            << (st.sweep_value ? format_double(*st.sweep_value) : "") << "," << st.trials
            << "," << format_double(st.median_db) << "," << format_double(st.mean_db)
            << "," << format_double(st.p10_db) << "," << format_double(st.p90_db) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

void write_pairs_csv(const std::string& path, const Summary& summary) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "method_a,method_b,sweep_value,win_rate_a,pairs\n";
    for (const PairStats& ps : summary.pairs) {
        out << method_name(ps.a) << "," << method_name(ps.b) << ","
            << (ps.sweep_value ? format_double(*ps.sweep_value) : "") << ","
            << format_double(ps.win_rate_a) << "," << ps.pairs << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace cdoa
