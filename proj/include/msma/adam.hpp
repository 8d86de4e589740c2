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

#include "msma/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace msma {

struct AdamConfig
{
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter tensors.
class Adam
{
public:
    Adam(AdamConfig config, std::span<Tensor* const> params);

    // params and grads must be parallel to the list given at construction.
    void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

    void set_learning_rate(double lr);
    [[nodiscard]] auto config() const noexcept -> const AdamConfig& { return config_; }
    [[nodiscard]] auto steps_taken() const noexcept -> std::size_t { return t_; }

private:
    AdamConfig config_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t t_ = 0;
};

} // namespace msma
