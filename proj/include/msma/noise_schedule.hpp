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

#include "msma/rng.hpp"
#include "msma/tensor.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace msma {

// Strictly decreasing geometric sequence of noise standard deviations,
// sigmas.front() the largest.
struct SigmaSchedule
{
    std::vector<double> sigmas;

    [[nodiscard]] auto levels() const noexcept -> std::size_t { return sigmas.size(); }
    [[nodiscard]] auto high() const -> double { return sigmas.front(); }
    [[nodiscard]] auto low() const -> double { return sigmas.back(); }

    friend auto operator==(const SigmaSchedule&, const SigmaSchedule&) -> bool = default;
};

// Endpoint-inclusive geometric schedule from sigma_high down to sigma_low.
// levels == 1 yields {sigma_high}. Throws DomainError unless
// sigma_high >= sigma_low > 0 and levels >= 1.
[[nodiscard]] auto make_schedule(double sigma_high, double sigma_low, std::size_t levels) -> SigmaSchedule;

// Named presets; "ncsn-default" is (1.0, 0.01, 10).
[[nodiscard]] auto preset_schedule(std::string_view name) -> SigmaSchedule;

// Denoising score-matching batch: noisy = clean + sigma * eps and the
// regression target -(noisy - clean) / sigma^2, per sample at its level.
struct PerturbedBatch
{
    Tensor clean;
    Tensor noisy;
    std::vector<std::size_t> level_index;
    Tensor target;
};

// One uniformly drawn level per sample, then D standard normals.
[[nodiscard]] auto perturb(const Tensor& clean, const SigmaSchedule& schedule, Rng& rng) -> PerturbedBatch;

// Same construction with caller-supplied levels and unit noise.
[[nodiscard]] auto perturb_with(const Tensor& clean, const SigmaSchedule& schedule,
                                std::vector<std::size_t> level_index, const Tensor& unit_noise)
    -> PerturbedBatch;

} // namespace msma
