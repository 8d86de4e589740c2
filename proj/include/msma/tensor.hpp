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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace msma {

using Shape = std::vector<std::size_t>;

// Dense row-major array of doubles. Plain value type: copies are deep and
// a const Tensor may be read from any number of threads.
class Tensor
{
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static auto matrix(std::size_t rows, std::size_t cols, double fill = 0.0) -> Tensor;
    static auto from_rows(std::initializer_list<std::initializer_list<double>> rows) -> Tensor;
    static auto scalar(double value) -> Tensor;

    [[nodiscard]] auto shape() const noexcept -> const Shape& { return shape_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return data_.size(); }
    [[nodiscard]] auto rank() const noexcept -> std::size_t { return shape_.size(); }

    // Matrix view: rank-1 tensors are treated as a single row.
    [[nodiscard]] auto rows() const noexcept -> std::size_t;
    [[nodiscard]] auto cols() const noexcept -> std::size_t;

    [[nodiscard]] auto data() noexcept -> std::span<double> { return data_; }
    [[nodiscard]] auto data() const noexcept -> std::span<const double> { return data_; }
    [[nodiscard]] auto values() const noexcept -> const std::vector<double>& { return data_; }

    [[nodiscard]] auto row(std::size_t r) -> std::span<double>;
    [[nodiscard]] auto row(std::size_t r) const -> std::span<const double>;

    auto operator[](std::size_t i) noexcept -> double& { return data_[i]; }
    auto operator[](std::size_t i) const noexcept -> double { return data_[i]; }
    auto operator()(std::size_t r, std::size_t c) noexcept -> double& { return data_[r * cols() + c]; }
    auto operator()(std::size_t r, std::size_t c) const noexcept -> double
    {
        return data_[r * cols() + c];
    }

    // Value of a one-element tensor.
    [[nodiscard]] auto item() const -> double;

    [[nodiscard]] auto all_finite() const noexcept -> bool;
    [[nodiscard]] auto reshaped(Shape shape) const -> Tensor;

    // Rows picked by index, in the given order.
    [[nodiscard]] auto gather_rows(std::span<const std::size_t> index) const -> Tensor;

    friend auto operator==(const Tensor&, const Tensor&) -> bool = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

[[nodiscard]] auto shape_string(const Shape& shape) -> std::string;
[[nodiscard]] auto shape_product(const Shape& shape) -> std::size_t;

// I.i.d. N(mean, std^2) entries drawn from rng in row-major order.
// Throws DomainError unless std > 0.
[[nodiscard]] auto gaussian_sample(Rng& rng, const Shape& shape, double mean, double std) -> Tensor;

} // namespace msma
