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

#include "msma/noise_schedule.hpp"

#include "msma/errors.hpp"

#include <cmath>
#include <string>

namespace msma {

auto make_schedule(double sigma_high, double sigma_low, std::size_t levels) -> SigmaSchedule
{
    if (levels < 1) {
        throw DomainError("noise schedule needs at least one level");
    }
    if (!(sigma_low > 0.0) || !(sigma_high >= sigma_low) || !std::isfinite(sigma_high)) {
        throw DomainError("noise schedule needs sigma_high >= sigma_low > 0");
    }
    if (levels == 1) {
        return {{sigma_high}};
    }
    // Interpolate in log space; endpoints are pinned so they are exact.
    const double log_high = std::log(sigma_high);
    const double step = (std::log(sigma_low) - log_high) / static_cast<double>(levels - 1);
    SigmaSchedule schedule;
    schedule.sigmas.resize(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        schedule.sigmas[i] = std::exp(log_high + step * static_cast<double>(i));
    }
    schedule.sigmas.front() = sigma_high;
    schedule.sigmas.back() = sigma_low;
    return schedule;
}

auto preset_schedule(std::string_view name) -> SigmaSchedule
{
    if (name == "ncsn-default") {
        return make_schedule(1.0, 0.01, 10);
    }
    throw DomainError("unknown schedule preset '" + std::string(name) + "'");
}

auto perturb_with(const Tensor& clean, const SigmaSchedule& schedule, std::vector<std::size_t> level_index,
                  const Tensor& unit_noise) -> PerturbedBatch
{
    if (unit_noise.shape() != clean.shape() || level_index.size() != clean.rows()) {
        throw DomainError("perturb: noise/level shapes do not match the batch");
    }
    const std::size_t cols = clean.cols();
    PerturbedBatch pb{clean, clean, std::move(level_index), Tensor(clean.shape())};
    for (std::size_t b = 0; b < clean.rows(); ++b) {
        if (pb.level_index[b] >= schedule.levels()) {
            throw DomainError("perturb: level index out of range");
        }
        const double sigma = schedule.sigmas[pb.level_index[b]];
        const double var = sigma * sigma;
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t i = b * cols + j;
            pb.noisy[i] = clean[i] + sigma * unit_noise[i];
            pb.target[i] = -(pb.noisy[i] - clean[i]) / var;
        }
    }
    return pb;
}

auto perturb(const Tensor& clean, const SigmaSchedule& schedule, Rng& rng) -> PerturbedBatch
{
    const std::size_t rows = clean.rows();
    const std::size_t cols = clean.cols();
    std::vector<std::size_t> levels(rows);
    Tensor noise(clean.shape());
    for (std::size_t b = 0; b < rows; ++b) {
        levels[b] = static_cast<std::size_t>(rng.below(schedule.levels()));
        for (std::size_t j = 0; j < cols; ++j) {
            noise[b * cols + j] = rng.normal();
        }
    }
    return perturb_with(clean, schedule, std::move(levels), noise);
}

} // namespace msma
