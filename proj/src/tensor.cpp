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

#include "msma/tensor.hpp"

#include "msma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace msma {

auto shape_product(const Shape& shape) -> std::size_t
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

auto shape_string(const Shape& shape) -> std::string
{
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
  : shape_(std::move(shape)), data_(shape_product(shape_), fill)
{
    for (const auto d : shape_) {
        if (d == 0) {
            throw DomainError("tensor dimensions must be positive, got " + shape_string(shape_));
        }
    }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_product(shape_) != data_.size()) {
        throw DomainError("tensor data length " + std::to_string(data_.size())
                          + " does not match shape " + shape_string(shape_));
    }
}

auto Tensor::matrix(std::size_t rows, std::size_t cols, double fill) -> Tensor
{
    return Tensor({rows, cols}, fill);
}

auto Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) -> Tensor
{
    const std::size_t n = rows.size();
    const std::size_t d = n == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(n * d);
    for (const auto& r : rows) {
        if (r.size() != d) {
            throw DomainError("ragged rows in Tensor::from_rows");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return {{n, d}, std::move(data)};
}

auto Tensor::scalar(double value) -> Tensor
{
    return {{1, 1}, std::vector<double>{value}};
}

auto Tensor::rows() const noexcept -> std::size_t
{
    if (shape_.empty()) {
        return 0;
    }
    return shape_.size() == 1 ? 1 : shape_[0];
}

auto Tensor::cols() const noexcept -> std::size_t
{
    if (shape_.empty()) {
        return 0;
    }
    return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

auto Tensor::row(std::size_t r) -> std::span<double>
{
    return std::span<double>(data_).subspan(r * cols(), cols());
}

auto Tensor::row(std::size_t r) const -> std::span<const double>
{
    return std::span<const double>(data_).subspan(r * cols(), cols());
}

auto Tensor::item() const -> double
{
    if (data_.size() != 1) {
        throw ContractError("item() on tensor of shape " + shape_string(shape_));
    }
    return data_.front();
}

auto Tensor::all_finite() const noexcept -> bool
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

auto Tensor::reshaped(Shape shape) const -> Tensor
{
    return {std::move(shape), data_};
}

auto Tensor::gather_rows(std::span<const std::size_t> index) const -> Tensor
{
    const std::size_t d = cols();
    std::vector<double> out;
    out.reserve(index.size() * d);
    for (const auto r : index) {
        const auto src = row(r);
        out.insert(out.end(), src.begin(), src.end());
    }
    return {{index.size(), d}, std::move(out)};
}

auto gaussian_sample(Rng& rng, const Shape& shape, double mean, double std) -> Tensor
{
    if (!(std > 0.0)) {
        throw DomainError("gaussian_sample requires std > 0");
    }
    Tensor out(shape);
    for (auto& v : out.data()) {
        v = mean + std * rng.normal();
    }
    return out;
}

} // namespace msma
