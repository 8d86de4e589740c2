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
#include <vector>

namespace msma {

// Full-covariance Gaussian mixture in D dimensions.
class Gmm
{
public:
    Gmm() = default;
    // covariances[k] is D x D row-major. Throws DomainError if a covariance
    // is not positive definite or the weights do not sum to 1.
    Gmm(std::vector<double> weights, std::vector<std::vector<double>> means,
        std::vector<std::vector<double>> covariances);

    [[nodiscard]] auto components() const noexcept -> std::size_t { return weights_.size(); }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return dim_; }
    [[nodiscard]] auto weights() const noexcept -> const std::vector<double>& { return weights_; }
    [[nodiscard]] auto means() const noexcept -> const std::vector<std::vector<double>>& { return means_; }
    [[nodiscard]] auto covariances() const noexcept -> const std::vector<std::vector<double>>& { return covs_; }

    [[nodiscard]] auto log_density(std::span<const double> x) const -> double;
    // Per-component log(w_k N(x; mu_k, S_k)).
    void component_log_terms(std::span<const double> x, std::span<double> out) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> weights_;
    std::vector<std::vector<double>> means_;
    std::vector<std::vector<double>> covs_;
    // Lower Cholesky factors (row-major) and log-determinants.
    std::vector<std::vector<double>> chol_;
    std::vector<double> log_det_;
    std::vector<double> log_weights_;
};

struct EmOptions
{
    std::size_t max_iterations = 500;
    double tolerance = 1e-6; // on the per-sample mean log-likelihood gain
    double variance_floor = 1e-6;
    std::size_t restarts = 3;
};

struct EmResult
{
    Gmm model;
    // Mean log-likelihood of the data under the parameters entering each
    // iteration, followed by the value for the returned parameters.
    std::vector<double> log_likelihood;
    std::size_t iterations = 0;
    bool floored = false; // a variance hit the floor
};

// One EM run from a k-means++ seeding.
[[nodiscard]] auto fit_em_once(const Tensor& x, std::size_t k, Rng& rng, const EmOptions& opt) -> EmResult;
// Best of opt.restarts runs by final log-likelihood.
[[nodiscard]] auto fit_em(const Tensor& x, std::size_t k, Rng& rng, const EmOptions& opt) -> EmResult;

[[nodiscard]] auto mean_log_likelihood(const Gmm& model, const Tensor& x) -> double;

struct GmmSelectionRow
{
    std::size_t k = 0;
    double mean_heldout_log_likelihood = 0.0;
    std::vector<double> fold_log_likelihood;
};

struct GmmSelection
{
    std::vector<GmmSelectionRow> trace;
    std::size_t selected_k = 0;
};

// K-fold cross-validated choice of the component count over
// [k_min, k_max]; ties go to the smaller k. Needs N >= folds * k_max.
[[nodiscard]] auto select_components(const Tensor& x, std::size_t k_min, std::size_t k_max, std::size_t folds,
                                     Rng& rng, const EmOptions& opt) -> GmmSelection;

} // namespace msma
