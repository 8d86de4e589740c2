// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include "msma/mixture.hpp"

#include <string>
#include <vector>

namespace msma {

// One-dimensional scenario with an inlier mode, a low-density gap and a
// minor local mode, probed at a low, medium and high noise scale.
struct ToyScenario
{
    GaussianMixture mixture;
    // Where "low-density outliers" are drawn from; not part of the data law.
    GaussianMixture low_density_probe;
    double inlier_center = 10.0;
    double low_density_center = 30.0;
    double local_mode_center = 50.0;
    double sigma_low = 0.1;
    double sigma_mid = 10.0;
    double sigma_high = 20.0;

    void validate() const;
};

// Inlier mode N(10, 2^2) with weight 0.92, local mode N(50, 1) with weight
// 0.08, low-density probes N(30, 2^2) in the gap between them.
[[nodiscard]] auto default_toy_scenario() -> ToyScenario;

[[nodiscard]] auto toy_scenario_from_json(const std::string& text) -> ToyScenario;
[[nodiscard]] auto toy_scenario_to_json(const ToyScenario& scn) -> std::string;

struct ToyRow
{
    std::string region; // inlier | low_density | local_mode
    double x = 0.0;
    double sigma = 0.0;
    double score = 0.0;             // d/dx log q_sigma(x)
    double score_norm_scaled = 0.0; // sigma * |score|
};

// Perturbed-density scores at the three region centers for each probe
// scale: 9 rows, region-major.
[[nodiscard]] auto toy_analysis(const ToyScenario& scn) -> std::vector<ToyRow>;

// Scores of n points per region (inliers from the mixture's dominant
// component, low-density points from the probe, local-mode points from the
// local-mode component) at every probe scale.
[[nodiscard]] auto toy_samples(const ToyScenario& scn, std::size_t n, Rng& rng) -> std::vector<ToyRow>;

} // namespace msma
