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
#include <functional>
#include <initializer_list>
#include <vector>

// Reverse-mode differentiation over whole tensors.
//
// A Tape records every primitive applied during a forward pass. Nodes are
// appended after their inputs, so walking the tape from the output towards
// index 0 visits each node once, in reverse topological order. One tape per
// forward/backward pass; tapes are not thread-safe.
namespace msma::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var
{
public:
    Var() = default;

    [[nodiscard]] auto value() const -> const Tensor&;
    [[nodiscard]] auto id() const noexcept -> std::size_t { return id_; }
    [[nodiscard]] auto tape() const noexcept -> Tape* { return tape_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) noexcept : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape
{
public:
    // Propagates the upstream gradient of a node into its inputs.
    using Backward = std::function<void(Tape&, const Tensor& upstream)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    auto operator=(const Tape&) -> Tape& = delete;
    Tape(Tape&&) = delete;
    auto operator=(Tape&&) -> Tape& = delete;
    ~Tape() = default;

    // Leaf whose gradient is tracked.
    auto variable(Tensor value) -> Var;
    // Leaf treated as a constant.
    auto constant(Tensor value) -> Var;

    // Appends a primitive's result. The node requires a gradient iff any
    // input does; otherwise `backward` is dropped.
    auto record(Tensor value, std::initializer_list<Var> inputs, Backward backward) -> Var;

    // Seeds d(output)/d(output) = 1 and runs the reverse sweep. The output
    // must hold exactly one element.
    void backward(Var output);

    // Gradient of the last backward() output w.r.t. v (zeros if unreached).
    [[nodiscard]] auto grad(Var v) const -> Tensor;

    [[nodiscard]] auto requires_grad(Var v) const -> bool { return nodes_.at(v.id()).requires_grad; }

    // Gradient accumulator of v, allocated on first use; nullptr when v
    // does not require a gradient. For use inside Backward callbacks.
    auto grad_buffer(Var v) -> Tensor*;

    [[nodiscard]] auto value(Var v) const -> const Tensor& { return nodes_.at(v.id()).value; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return nodes_.size(); }

private:
    struct Node
    {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        Backward backward;
    };

    std::vector<Node> nodes_;
};

// --- registered primitives --------------------------------------------------

// Elementwise a + b. b may also be a 1 x n row broadcast over a's rows.
auto add(Var a, Var b) -> Var;
auto sub(Var a, Var b) -> Var;
// Elementwise (Hadamard) product; shapes must match.
auto mul(Var a, Var b) -> Var;
auto matmul(Var a, Var b) -> Var;
auto scale(Var a, double factor) -> Var;
auto elu(Var a) -> Var;
auto tanh(Var a) -> Var;
auto exp(Var a) -> Var;
auto square(Var a) -> Var;
// Sum of all elements, 1 x 1.
auto sum(Var a) -> Var;
// Per-row sums, rows x 1.
auto sum_rows(Var a) -> Var;
// Columns [begin, end) of a matrix.
auto slice_cols(Var a, std::size_t begin, std::size_t end) -> Var;
// Elementwise standard-normal log density, -x^2/2 - log(2 pi)/2.
auto gaussian_logpdf(Var a) -> Var;

// d f / d x for a scalar-valued f built from the primitives above.
// Throws ContractError when f's result has more than one element.
auto grad(const std::function<Var(Var)>& f, const Tensor& x) -> Tensor;

} // namespace msma::ad
