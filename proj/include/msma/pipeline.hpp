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

#include "msma/data_io.hpp"
#include "msma/mixture.hpp"
#include "msma/noise_schedule.hpp"
#include "msma/score_net.hpp"
#include "msma/tensor.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace msma {

// Anything that can produce s(x, sigma_j) for a batch of rows at each level
// of its schedule.
struct ScoreSource
{
    SigmaSchedule schedule;
    std::string id;
    std::function<Tensor(const Tensor& x, std::size_t level)> score;
};

[[nodiscard]] auto net_source(std::shared_ptr<const ScoreNet> net, std::string id) -> ScoreSource;
// Exact scores of the mixture perturbed at each sigma; id "analytic".
[[nodiscard]] auto analytic_source(const GaussianMixture& gm, const SigmaSchedule& schedule) -> ScoreSource;

// N x L matrix of score norms, column j at schedule.sigmas[j].
struct ScoreMatrix
{
    Tensor values;
    SigmaSchedule schedule;
    std::string source_id;
    std::string dataset_id;
    bool sigma_scaled = true;
    std::string config_hash;
};

struct NormOptions
{
    bool sigma_scaled = true;
    std::size_t batch_size = 256;
};

// Entry (n, j) is sigma_j * ||s(x_n, sigma_j)|| when sigma-scaled, else the
// plain norm. Throws NumericalError naming the sample and level if a score
// is not finite.
[[nodiscard]] auto compute_norms(const ScoreSource& source, const Tensor& data, const NormOptions& options = {})
    -> ScoreMatrix;

// Auxiliary models are fitted on the score norms of the score-net training
// samples themselves; only evaluation uses held-out data. Warns if test rows
// also occur in the training set and throws DomainError if test is empty.
struct SplitPolicy
{
    const Dataset* train = nullptr;
    const Dataset* aux_fit = nullptr;
    const Dataset* test = nullptr;
    std::size_t overlapping_rows = 0;
};

[[nodiscard]] auto split_train_fit(const Dataset& train, const Dataset& test) -> SplitPolicy;

// CSV with a `sigma_<value>` header per column plus `<path>.json` holding
// the schedule, source id, dataset id, scaling flag and config hash.
// Network-vs-oracle comparison at inlier points perturbed at each level
// (x + sigma_j * eps, one fresh draw per point and level). Per level:
//   rms_relative_error = sqrt(mean ||sigma (s - s*)||^2 / mean ||sigma s*||^2)
// with s* the score of the oracle mixture convolved with N(0, sigma^2 I).
struct FidelityRow
{
    std::size_t level = 0;
    double sigma = 0.0;
    double rms_relative_error = 0.0;
    double mean_scaled_norm = 0.0;        // mean sigma ||s||
    double mean_scaled_norm_oracle = 0.0; // mean sigma ||s*||
};

// Throws DomainError when points, oracle and source disagree on dimension.
[[nodiscard]] auto score_fidelity(const ScoreSource& source, const GaussianMixture& oracle, const Tensor& points,
                                  Rng& rng) -> std::vector<FidelityRow>;

void save_score_matrix(const std::filesystem::path& csv_path, const ScoreMatrix& m);
[[nodiscard]] auto load_score_matrix(const std::filesystem::path& csv_path) -> ScoreMatrix;
[[nodiscard]] auto sidecar_path(const std::filesystem::path& csv_path) -> std::filesystem::path;

} // namespace msma
