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

#include "msma/adam.hpp"
#include "msma/autodiff.hpp"
#include "msma/noise_schedule.hpp"
#include "msma/rng.hpp"
#include "msma/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace msma {

// Noise-conditional score estimator s(x, sigma_i): a fully connected ELU
// network fed [x, onehot(i)] whose D-vector output is divided by sigma_i.
// The output layer starts at zero, so an untrained net has a zero score
// field.
class ScoreNet
{
public:
    static constexpr std::size_t default_width = 128;
    static constexpr std::size_t default_depth = 3;

    ScoreNet() = default;
    ScoreNet(std::size_t dim, const SigmaSchedule& schedule, std::vector<std::size_t> hidden, Rng& rng);

    [[nodiscard]] auto dim() const noexcept -> std::size_t { return dim_; }
    [[nodiscard]] auto levels() const noexcept -> std::size_t { return sigmas_.size(); }
    [[nodiscard]] auto schedule() const -> SigmaSchedule { return {sigmas_}; }
    [[nodiscard]] auto hidden() const noexcept -> const std::vector<std::size_t>& { return hidden_; }

    // Scores for every row of x (B x D) at one noise level. Rows are
    // processed independently. Throws DomainError if level >= levels().
    [[nodiscard]] auto score(const Tensor& x, std::size_t level) const -> Tensor;

    // Recorded forward pass for training. `input` is
    // conditioned_input(x, level_index), `params` the tape leaves for
    // parameters() in order.
    [[nodiscard]] auto forward(ad::Var input, std::span<const std::size_t> level_index,
                               std::span<const ad::Var> params) const -> ad::Var;

    // [x, onehot(level)] rows.
    [[nodiscard]] auto conditioned_input(const Tensor& x, std::span<const std::size_t> level_index) const
        -> Tensor;

    // Weights then bias, layer by layer (declaration order).
    [[nodiscard]] auto parameters() -> std::vector<Tensor*>;
    [[nodiscard]] auto parameters() const -> std::vector<const Tensor*>;
    [[nodiscard]] auto parameter_count() const -> std::size_t;

    friend auto operator==(const ScoreNet&, const ScoreNet&) -> bool = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::size_t> hidden_;
    std::vector<Tensor> weights_; // fan_in x fan_out
    std::vector<Tensor> biases_;  // 1 x fan_out
    std::vector<double> sigmas_;
};

// Mean over the batch of sigma^2 * 0.5 * ||s(noisy, sigma) - target||^2,
// i.e. 0.5 * ||sigma * s + (noisy - clean) / sigma||^2 per sample.
[[nodiscard]] auto dsm_loss(const ScoreNet& net, const PerturbedBatch& batch, const SigmaSchedule& schedule)
    -> double;

struct LossGrad
{
    double loss = 0.0;
    std::vector<Tensor> grads; // parallel to parameters()
};

[[nodiscard]] auto dsm_loss_grad(const ScoreNet& net, const PerturbedBatch& batch,
                                 const SigmaSchedule& schedule) -> LossGrad;

enum class LrSchedule
{
    constant,
    cosine // half-cosine decay from adam.learning_rate to 0 at the last step
};

struct TrainConfig
{
    std::size_t steps = 10000;
    std::size_t batch_size = 128;
    AdamConfig adam{};
    LrSchedule lr_schedule = LrSchedule::constant;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 1000;
    // Invoked every checkpoint_every steps and after the final step.
    std::function<void(std::size_t step, const ScoreNet&)> on_checkpoint;
};

struct TrainResult
{
    ScoreNet net;
    std::vector<double> loss_history; // one entry per step
};

// Step-indexed (1-based) learning rate under config.lr_schedule.
[[nodiscard]] auto learning_rate_at(const TrainConfig& config, std::size_t step) -> double;

// Minimises dsm_loss with Adam on minibatches drawn epoch-wise from data
// (N x D, N >= batch_size). Throws NumericalError naming the step and
// learning rate if the loss stops being finite.
[[nodiscard]] auto train(ScoreNet net, const Tensor& data, const SigmaSchedule& schedule,
                         const TrainConfig& config) -> TrainResult;

} // namespace msma
