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

#include "msma/flow.hpp"
#include "msma/gmm.hpp"
#include "msma/kdtree.hpp"
#include "msma/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msma {

enum class AuxVariant
{
    gmm,
    flow,
    knn
};

[[nodiscard]] auto variant_name(AuxVariant v) -> std::string_view;
// Throws ConfigError for anything but "gmm", "flow" or "knn".
[[nodiscard]] auto parse_variant(std::string_view name) -> AuxVariant;

enum class KnnAggregate
{
    kth, // distance to the k-th neighbour
    mean // mean distance to the k nearest
};

struct AuxOptions
{
    AuxVariant variant = AuxVariant::gmm;
    std::uint64_t seed = 0;

    std::size_t gmm_k_min = 2;
    std::size_t gmm_k_max = 20;
    std::size_t gmm_folds = 10;
    EmOptions em{};

    FlowOptions flow{};

    std::size_t knn_k = 5;
    KnnAggregate knn_aggregate = KnnAggregate::kth;
};

// Column transform learned on the fit rows: x' = (x - mean) * scale.
struct Preprocessing
{
    std::vector<double> mean;
    std::vector<double> scale;

    [[nodiscard]] auto apply(const Tensor& x) const -> Tensor;
    // log |det d x'/d x|, added to densities evaluated in x' space.
    [[nodiscard]] auto log_jacobian() const -> double;
};

// Auxiliary in-distribution model over score-norm rows. inlier_score is
// larger for more typical rows:
//   gmm  log-likelihood after mean normalisation
//   flow exact log-density (columns standardised, Jacobian included)
//   knn  minus the k-th (or mean) neighbour distance
class AuxModel
{
public:
    AuxModel() = default;

    [[nodiscard]] static auto fit(const Tensor& norms, const AuxOptions& options) -> AuxModel;

    [[nodiscard]] auto variant() const noexcept -> AuxVariant { return variant_; }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return prep_.mean.size(); }
    [[nodiscard]] auto preprocessing() const noexcept -> const Preprocessing& { return prep_; }
    [[nodiscard]] auto gmm() const -> const Gmm&;
    [[nodiscard]] auto flow() const -> const MafFlow&;
    [[nodiscard]] auto selection() const noexcept -> const std::optional<GmmSelection>& { return selection_; }
    [[nodiscard]] auto flow_loss() const noexcept -> const std::vector<double>& { return flow_loss_; }

    // Throws DomainError when the row length differs from dim().
    [[nodiscard]] auto inlier_score(std::span<const double> row) const -> double;
    [[nodiscard]] auto inlier_scores(const Tensor& rows) const -> std::vector<double>;
    // k-NN only: scores of the fit rows with each row's own match excluded.
    [[nodiscard]] auto fit_set_scores() const -> std::vector<double>;

    [[nodiscard]] auto to_json(const std::string& config_hash = "") const -> std::string;
    [[nodiscard]] static auto from_json(const std::string& text) -> AuxModel;

private:
    auto knn_score(std::span<const double> row, std::optional<std::size_t> exclude) const -> double;

    AuxVariant variant_ = AuxVariant::gmm;
    Preprocessing prep_;
    Gmm gmm_;
    std::optional<GmmSelection> selection_;
    FlowOptions flow_options_;
    MafFlow flow_;
    std::vector<double> flow_loss_;
    KdTree tree_;
    std::size_t knn_k_ = 5;
    KnnAggregate knn_aggregate_ = KnnAggregate::kth;
};

void save_aux_model(const std::filesystem::path& path, const AuxModel& model, const std::string& config_hash);
[[nodiscard]] auto load_aux_model(const std::filesystem::path& path) -> AuxModel;

// CSV: k, mean held-out log-likelihood, then one column per fold.
void write_gmm_trace(const std::filesystem::path& path, const GmmSelection& selection,
                     const std::string& config_hash);

} // namespace msma
