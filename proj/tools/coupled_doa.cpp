// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.
//
// Command-line front end: scene simulation, single-shot estimation,
// Monte-Carlo benchmarking and spectrum export.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cdoa/bench.hpp"
#include "cdoa/io.hpp"

namespace {

using namespace cdoa;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

ExperimentConfig load_experiment(const std::string& path) {
    if (path.empty()) {
        return ExperimentConfig{};  // built-in reference scenario
    }
    return experiment_from_json(load_json(path));
}

std::string sibling_csv_path(const std::string& out) {
    const std::filesystem::path p(out);
    std::filesystem::path csv = p;
    csv.replace_extension(".csv");
    if (csv == p) {
        csv += ".csv";
    }
    return csv.string();
}

int cmd_simulate(const std::string& config_path, std::int64_t seed_override,
                 const std::string& out) {
    ExperimentConfig cfg = load_experiment(config_path);
    if (seed_override >= 0) {
        cfg.scene.seed = static_cast<std::uint64_t>(seed_override);
    }
    const Snapshots snaps = make_snapshots(cfg.scene);
    save_json(out, snapshots_to_json(snaps));
    std::cout << "wrote " << out << " (" << snaps.r.rows() << "x" << snaps.r.cols()
              << " snapshots, seed " << cfg.scene.seed << ")\n";
    return kExitOk;
}

int cmd_estimate(const std::string& input, const std::string& method_str, std::int64_t k_arg,
                 const std::string& out, scalar_t fine_step, const Hyper& hyper,
                 bool spectrum_only) {
    const auto method = method_from_name(method_str);
    if (!method) {
        std::cerr << "unknown method: " << method_str << "\n";
        return kExitConfig;
    }
    const Snapshots snaps = snapshots_from_json(load_json(input));
    const index_t k = k_arg > 0 ? static_cast<index_t>(k_arg) : snaps.config.k_targets;

    if (*method == Method::music) {
        const MusicResult music = music_spectrum(snaps.r, snaps.config.array,
                                                 snaps.config.grid.lo_deg(),
                                                 snaps.config.grid.hi_deg(), k, fine_step);
        if (spectrum_only) {
            write_spectrum_csv(out, music.angles_deg, music.pseudospectrum);
            std::cout << "wrote " << out << "\n";
            return kExitOk;
        }
        json j{{"doas_deg", rvec_to_json(music.doas_deg)},
               {"spectrum", rvec_to_json(music.pseudospectrum)},
               {"angles_deg", rvec_to_json(music.angles_deg)}};
        save_json(out, j);
        write_spectrum_csv(sibling_csv_path(out), music.angles_deg, music.pseudospectrum);
        std::cout << "wrote " << out << " and " << sibling_csv_path(out) << "\n";
        return kExitOk;
    }

    SblMode mode = SblMode::full;
    if (*method == Method::ogsbi) mode = SblMode::no_coupling;
    if (*method == Method::bcs) mode = SblMode::on_grid;
    const Dictionary dict = build_dictionary(snaps.config.grid, snaps.config.array);
    const EstimateResult result = run_sblmc(snaps, dict, hyper, k, mode);
    const rvec_t angles = dict.grid.angles_deg + result.state.nu_deg;
    if (spectrum_only) {
        write_spectrum_csv(out, angles, result.spectrum);
        std::cout << "wrote " << out << "\n";
        return kExitOk;
    }
    save_json(out, estimate_to_json(result, angles));
    write_spectrum_csv(sibling_csv_path(out), angles, result.spectrum);
    std::cout << "wrote " << out << " and " << sibling_csv_path(out) << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = load_experiment(config_path);
    std::filesystem::create_directories(out_dir);
    const std::vector<TrialReport> reports = run_sweep(cfg);
    const Summary summary = aggregate(reports);
    const auto dir = std::filesystem::path(out_dir);
    write_reports_csv((dir / "reports.csv").string(), reports);
    write_summary_csv((dir / "summary.csv").string(), summary);
    write_pairs_csv((dir / "pairwise_winrate.csv").string(), summary);
    std::cout << "wrote " << (dir / "reports.csv").string() << " (" << reports.size()
              << " trials), summary.csv, pairwise_winrate.csv\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled-doa: sparse Bayesian DOA estimation benchmark for MIMO radar "
                 "with unknown mutual coupling"};
    app.require_subcommand(1);

    std::string config_path;
    std::string input_path;
    std::string out_path;
    std::string method_str = "sblmc";
    std::int64_t seed_override = -1;
    std::int64_t k_arg = -1;

    auto* simulate = app.add_subcommand("simulate", "generate a scene and write snapshots");
    simulate->add_option("--config", config_path, "experiment config JSON");
    simulate->add_option("--seed", seed_override, "override the scene seed");
    simulate->add_option("--out", out_path, "output snapshots JSON")->required();

    auto* estimate = app.add_subcommand("estimate", "run one estimator on saved snapshots");
    estimate->add_option("--input", input_path, "snapshots JSON")->required();
    estimate->add_option("--method", method_str, "sblmc|ogsbi|bcs|music");
    estimate->add_option("--k", k_arg, "number of targets (default: from snapshots)");
    estimate->add_option("--config", config_path, "experiment config JSON (hyperparameters)");
    estimate->add_option("--out", out_path, "output result JSON (+ spectrum CSV)")->required();

    auto* bench = app.add_subcommand("bench", "run the Monte-Carlo benchmark");
    bench->add_option("--config", config_path, "experiment config JSON");
    bench->add_option("--out", out_path, "output directory")->required();

    auto* spectrum = app.add_subcommand("spectrum", "write a spectrum CSV only");
    spectrum->add_option("--input", input_path, "snapshots JSON")->required();
    spectrum->add_option("--method", method_str, "sblmc|ogsbi|bcs|music");
    spectrum->add_option("--k", k_arg, "number of targets (default: from snapshots)");
    spectrum->add_option("--config", config_path, "experiment config JSON (hyperparameters)");
    spectrum->add_option("--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) {
            return cmd_simulate(config_path, seed_override, out_path);
        }
        const cdoa::Hyper hyper =
            load_experiment(estimate->parsed() || spectrum->parsed() ? config_path : "").hyper;
        if (estimate->parsed()) {
            return cmd_estimate(input_path, method_str, k_arg, out_path,
                                load_experiment(config_path).music_fine_step_deg, hyper,
                                false);
        }
        if (spectrum->parsed()) {
            return cmd_estimate(input_path, method_str, k_arg, out_path,
                                load_experiment(config_path).music_fine_step_deg, hyper,
                                true);
        }
        if (bench->parsed()) {
            return cmd_bench(config_path, out_path);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cdoa::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
