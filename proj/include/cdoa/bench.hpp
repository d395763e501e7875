// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdoa/estimators.hpp"

namespace cdoa {

using json = nlohmann::json;

enum class Method { sblmc, ogsbi, bcs, music };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/** Optional one-axis parameter sweep. */
struct SweepSpec {
    enum class Axis { none, snr_db, coupling_db, grid_step_deg };
    Axis axis = Axis::none;
    std::vector<scalar_t> values;
};

/** Full description of one benchmark run. */
struct ExperimentConfig {
    SceneConfig scene;  ///< reference defaults
    Hyper hyper;
    std::vector<Method> methods = {Method::sblmc, Method::ogsbi, Method::bcs, Method::music};
    index_t trials = 1;
    SweepSpec sweep;
    scalar_t music_fine_step_deg = 0.01;
    std::string output_path;

    void validate() const;
};

/** One (method, sweep value, seed) outcome. */
struct TrialReport {
    Method method = Method::sblmc;
    std::optional<scalar_t> sweep_value;
    std::uint64_t seed = 0;
    scalar_t error_db = 0.0;  ///< -inf means exact recovery, +inf a failed run
    rvec_t doas_deg;
    scalar_t runtime_s = 0.0;
    bool converged = false;
    index_t iters = 0;
};

/**
 * Generate the scene for `seed`, synthesize, dispatch to the selected
 * estimator and score against the ground truth. Estimator failures come
 * back as error_db = +inf with converged = false; InfeasibleScene
 * propagates.
 */
TrialReport run_trial(const ExperimentConfig& cfg, Method method, std::uint64_t seed);

/**
 * Run every (sweep value x method x trial) combination on a bounded worker
 * pool (COUPLED_DOA_THREADS overrides the width). Trial i uses seed
 * scene.seed + i so methods are compared on identical scenes. Report order
 * is deterministic: methods as configured, then sweep values, then seeds.
 */
std::vector<TrialReport> run_sweep(const ExperimentConfig& cfg);

struct MethodStats {
    Method method;
    std::optional<scalar_t> sweep_value;
    std::size_t trials = 0;
    scalar_t median_db = 0.0;
    scalar_t mean_db = 0.0;
    scalar_t p10_db = 0.0;
    scalar_t p90_db = 0.0;
};

struct PairStats {
    Method a;
    Method b;
    std::optional<scalar_t> sweep_value;
    scalar_t win_rate_a = 0.0;  ///< ties count half
    std::size_t pairs = 0;
};

struct Summary {
    std::vector<MethodStats> stats;
    std::vector<PairStats> pairs;
};

/**
 * Per-(method, sweep value) error statistics plus pairwise win rates on
 * paired seeds. Exact recoveries enter the statistics at a -120 dB floor;
 * raw reports are untouched.
 */
Summary aggregate(const std::vector<TrialReport>& reports);

json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const json& j);

/// Header "method,sweep_value,seed,error_db,converged,iters,runtime_s".
void write_reports_csv(const std::string& path, const std::vector<TrialReport>& reports);
std::vector<TrialReport> parse_reports_csv(const std::string& path);

void write_summary_csv(const std::string& path, const Summary& summary);
void write_pairs_csv(const std::string& path, const Summary& summary);

}  // namespace cdoa
