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
#include <span>
#include <string>
#include <vector>

namespace msma {

// Weighted mixture of axis-aligned Gaussians. Everything that evaluates it
// works in log space: perturbing far-apart narrow modes underflows plain
// densities long before the log densities become unrepresentable.
struct GaussianMixture
{
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> variances;

    [[nodiscard]] auto components() const noexcept -> std::size_t { return weights.size(); }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return means.empty() ? 0 : means.front().size(); }

    // Throws DomainError unless weights are >= 0 and sum to 1 (1e-12),
    // variances are > 0 and all vectors share one dimension.
    void validate() const;

    friend auto operator==(const GaussianMixture&, const GaussianMixture&) -> bool = default;
};

// Validated constructor.
[[nodiscard]] auto make_mixture(std::vector<double> weights, std::vector<std::vector<double>> means,
                                std::vector<std::vector<double>> variances) -> GaussianMixture;

// Isotropic single component.
[[nodiscard]] auto make_gaussian(std::vector<double> mean, double variance) -> GaussianMixture;

// Law of x + sigma * eps: every variance grows by sigma^2.
[[nodiscard]] auto perturbed_mixture(const GaussianMixture& gm, double sigma) -> GaussianMixture;

// Law of (x - offset) * scale, per coordinate (scale > 0).
[[nodiscard]] auto affine_mixture(const GaussianMixture& gm, std::span<const double> offset,
                                  std::span<const double> scale) -> GaussianMixture;

[[nodiscard]] auto log_density(const GaussianMixture& gm, std::span<const double> x) -> double;

// grad_x log p(x) = sum_k r_k(x) (mu_k - x) / v_k. Throws NumericalError
// if every component's log density is -inf at x.
[[nodiscard]] auto mixture_score(const GaussianMixture& gm, std::span<const double> x) -> std::vector<double>;

// Row-wise scores of an N x D matrix, rows evaluated in parallel.
[[nodiscard]] auto mixture_score(const GaussianMixture& gm, const Tensor& x) -> Tensor;

// Ancestral sampling: component by weight, then independent coordinates.
[[nodiscard]] auto sample_mixture_values(const GaussianMixture& gm, std::size_t n, Rng& rng) -> Tensor;

[[nodiscard]] auto mixture_to_json(const GaussianMixture& gm) -> std::string;
[[nodiscard]] auto mixture_from_json(const std::string& text) -> GaussianMixture;

} // namespace msma
