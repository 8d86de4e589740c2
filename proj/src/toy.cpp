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

#include "msma/toy.hpp"

#include "msma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace msma {

namespace {

auto nearest_component(const GaussianMixture& gm, double x) -> std::size_t
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < gm.components(); ++k) {
        if (std::abs(gm.means[k][0] - x) < std::abs(gm.means[best][0] - x)) {
            best = k;
        }
    }
    return best;
}

auto row_at(const ToyScenario& scn, const char* region, double x, double sigma) -> ToyRow
{
    const GaussianMixture smoothed = perturbed_mixture(scn.mixture, sigma);
    const double s = mixture_score(smoothed, std::vector<double>{x}).front();
    return {region, x, sigma, s, sigma * std::abs(s)};
}

} // namespace

void ToyScenario::validate() const
{
    mixture.validate();
    low_density_probe.validate();
    if (mixture.dim() != 1 || low_density_probe.dim() != 1) {
        throw DomainError("toy scenario must be one-dimensional");
    }
    if (!(sigma_low > 0.0 && sigma_low < sigma_mid && sigma_mid < sigma_high)) {
        throw DomainError("toy scenario needs 0 < sigma_low < sigma_mid < sigma_high");
    }
}

auto default_toy_scenario() -> ToyScenario
{
    ToyScenario scn;
    scn.mixture = make_mixture({0.92, 0.08}, {{10.0}, {50.0}}, {{4.0}, {1.0}});
    scn.low_density_probe = make_gaussian({30.0}, 4.0);
    return scn;
}

auto toy_scenario_to_json(const ToyScenario& scn) -> std::string
{
    nlohmann::json j;
    j["mixture"] = nlohmann::json::parse(mixture_to_json(scn.mixture));
    j["low_density_probe"] = nlohmann::json::parse(mixture_to_json(scn.low_density_probe));
    j["centers"] = {{"inlier", scn.inlier_center},
                    {"low_density", scn.low_density_center},
                    {"local_mode", scn.local_mode_center}};
    j["sigmas"] = {{"low", scn.sigma_low}, {"mid", scn.sigma_mid}, {"high", scn.sigma_high}};
    return j.dump(2);
}

auto toy_scenario_from_json(const std::string& text) -> ToyScenario
{
    ToyScenario scn = default_toy_scenario();
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.contains("mixture")) {
            scn.mixture = mixture_from_json(j.at("mixture").dump());
        }
        if (j.contains("low_density_probe")) {
            scn.low_density_probe = mixture_from_json(j.at("low_density_probe").dump());
        }
        if (j.contains("centers")) {
            const auto& c = j.at("centers");
            scn.inlier_center = c.value("inlier", scn.inlier_center);
            scn.low_density_center = c.value("low_density", scn.low_density_center);
            scn.local_mode_center = c.value("local_mode", scn.local_mode_center);
        }
        if (j.contains("sigmas")) {
            const auto& s = j.at("sigmas");
            scn.sigma_low = s.value("low", scn.sigma_low);
            scn.sigma_mid = s.value("mid", scn.sigma_mid);
            scn.sigma_high = s.value("high", scn.sigma_high);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad toy scenario: ") + e.what());
    }
    scn.validate();
    return scn;
}

auto toy_analysis(const ToyScenario& scn) -> std::vector<ToyRow>
{
    scn.validate();
    std::vector<ToyRow> rows;
    const std::pair<const char*, double> regions[] = {{"inlier", scn.inlier_center},
                                                      {"low_density", scn.low_density_center},
                                                      {"local_mode", scn.local_mode_center}};
    for (const auto& [name, x] : regions) {
        for (const double sigma : {scn.sigma_low, scn.sigma_mid, scn.sigma_high}) {
            rows.push_back(row_at(scn, name, x, sigma));
        }
    }
    return rows;
}

auto toy_samples(const ToyScenario& scn, std::size_t n, Rng& rng) -> std::vector<ToyRow>
{
    scn.validate();
    auto component = [&](double center) {
        const std::size_t k = nearest_component(scn.mixture, center);
        return make_mixture({1.0}, {scn.mixture.means[k]}, {scn.mixture.variances[k]});
    };
    const std::pair<const char*, GaussianMixture> sources[] = {{"inlier", component(scn.inlier_center)},
                                                               {"low_density", scn.low_density_probe},
                                                               {"local_mode", component(scn.local_mode_center)}};
    std::vector<ToyRow> rows;
    for (const auto& [name, law] : sources) {
        const Tensor xs = sample_mixture_values(law, n, rng);
        for (const double sigma : {scn.sigma_low, scn.sigma_mid, scn.sigma_high}) {
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back(row_at(scn, name, xs[i], sigma));
            }
        }
    }
    return rows;
}

} // namespace msma
