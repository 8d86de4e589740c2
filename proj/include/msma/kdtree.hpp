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
#include <optional>
#include <span>
#include <vector>

namespace msma {

struct Neighbor
{
    double distance = 0.0;
    std::size_t index = 0;

    friend auto operator==(const Neighbor&, const Neighbor&) -> bool = default;
};

// Exact k-nearest-neighbour search over a fixed point set. Neighbours come
// back sorted by (distance, index), so results match an exhaustive scan
// bit for bit, including which of several equidistant points are kept.
class KdTree
{
public:
    KdTree() = default;
    explicit KdTree(Tensor points, std::size_t leaf_size = 16);

    [[nodiscard]] auto size() const noexcept -> std::size_t { return points_.rows(); }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return points_.cols(); }
    [[nodiscard]] auto points() const noexcept -> const Tensor& { return points_; }

    // `exclude` drops one stored point (a query against its own fit set).
    [[nodiscard]] auto query(std::span<const double> q, std::size_t k,
                             std::optional<std::size_t> exclude = std::nullopt) const -> std::vector<Neighbor>;

private:
    struct Node
    {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t axis = 0;
        double split = 0.0;
        std::size_t left = 0; // 0 marks a leaf; the root is never a child
        std::size_t right = 0;
    };

    auto build(std::size_t begin, std::size_t end) -> std::size_t;

    Tensor points_;
    std::size_t leaf_size_ = 16;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

// Euclidean distance accumulated in coordinate order.
[[nodiscard]] auto euclidean(std::span<const double> a, std::span<const double> b) -> double;

// Exhaustive reference search with the same ordering rules.
[[nodiscard]] auto knn_brute_force(const Tensor& points, std::span<const double> q, std::size_t k,
                                   std::optional<std::size_t> exclude = std::nullopt) -> std::vector<Neighbor>;

} // namespace msma
