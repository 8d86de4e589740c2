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
#include "msma/rng.hpp"
#include "msma/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace msma {

struct FlowOptions
{
    std::vector<std::size_t> hidden{128, 128};
    std::size_t transforms = 2;
    std::size_t epochs = 1000;
    std::size_t batch_size = 128;
    AdamConfig adam{};
    std::uint64_t seed = 0;
};

// Masked autoregressive flow: a stack of MADE affine transforms
//   z_i = (x_i - mu_i(x_<i)) * exp(-alpha_i(x_<i))
// with the variable order reversed between consecutive transforms and a
// standard-normal base. Output layers start at zero (identity flow).
class MafFlow
{
public:
    MafFlow() = default;
    MafFlow(std::size_t dim, const FlowOptions& options, Rng& rng);

    [[nodiscard]] auto dim() const noexcept -> std::size_t { return dim_; }
    [[nodiscard]] auto transforms() const noexcept -> std::size_t { return layers_.size(); }
    [[nodiscard]] auto hidden() const noexcept -> const std::vector<std::size_t>& { return hidden_; }

    // Data -> latent, and its exact inverse (sequential over coordinates).
    [[nodiscard]] auto forward(const Tensor& x) const -> Tensor;
    [[nodiscard]] auto inverse(const Tensor& z) const -> Tensor;
    // Exact log-density of each row.
    [[nodiscard]] auto log_density(const Tensor& x) const -> std::vector<double>;

    // Mean negative log-likelihood of x recorded on a tape; `params` are
    // tape leaves for parameters() in order.
    [[nodiscard]] auto nll(ad::Tape& tape, const Tensor& x, std::span<const ad::Var> params) const -> ad::Var;

    // Per transform: W, b for each hidden layer then the output layer.
    [[nodiscard]] auto parameters() -> std::vector<Tensor*>;
    [[nodiscard]] auto parameters() const -> std::vector<const Tensor*>;

    friend auto operator==(const MafFlow&, const MafFlow&) -> bool = default;

private:
    struct Made
    {
        std::vector<std::size_t> degree; // per input coordinate, 1..D
        std::vector<Tensor> weights;
        std::vector<Tensor> biases;
        std::vector<Tensor> masks;

        friend auto operator==(const Made&, const Made&) -> bool = default;
    };

    void build_masks(Made& m) const;
    // Shift and log-scale for every row of x, each B x D.
    void conditioner(const Made& m, const Tensor& x, Tensor& mu, Tensor& alpha) const;

    std::size_t dim_ = 0;
    std::vector<std::size_t> hidden_;
    std::vector<Made> layers_;
};

struct FlowFit
{
    MafFlow flow;
    std::vector<double> epoch_loss; // mean NLL over each epoch's batches
};

// Maximum-likelihood training with Adam on shuffled minibatches. Throws
// DomainError if N < batch_size and NumericalError naming the epoch if the
// loss stops being finite.
[[nodiscard]] auto fit_maf(const Tensor& x, const FlowOptions& options) -> FlowFit;

} // namespace msma
