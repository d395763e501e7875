// SPDX-License-Identifier: Apache-2.0
//
// coupled-doa: off-grid sparse Bayesian DOA estimation for colocated MIMO
// radar with unknown inter-antenna mutual coupling.

#pragma once

#include <string>

#include <json.hpp>

#include "cdoa/estimators.hpp"

namespace cdoa {

using json = nlohmann::json;

// Complex scalars serialize as two-element [re, im] arrays; matrices as
// {"rows", "cols", "data"} with data nested row-major. A reload reproduces
// every double bit-exactly.

json cvec_to_json(const cvec_t& v);
cvec_t cvec_from_json(const json& j);

json cmat_to_json(const cmat_t& m);
cmat_t cmat_from_json(const json& j);

json rvec_to_json(const rvec_t& v);
rvec_t rvec_from_json(const json& j);

json scene_config_to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const json& j);

json scene_to_json(const Scene& scene);
Scene scene_from_json(const json& j);

json snapshots_to_json(const Snapshots& snaps);
Snapshots snapshots_from_json(const json& j);

json estimate_to_json(const EstimateResult& result, const rvec_t& angles_deg);
EstimateResult estimate_from_json(const json& j);

void save_json(const std::string& path, const json& j);
json load_json(const std::string& path);

/// Shortest text form that parses back to the identical double.
std::string format_double(scalar_t v);

/// Two-column CSV with header "angle_deg,power".
void write_spectrum_csv(const std::string& path, const rvec_t& angles_deg,
                        const rvec_t& power);

}  // namespace cdoa
