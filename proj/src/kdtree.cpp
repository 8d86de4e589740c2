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

#include "msma/kdtree.hpp"

#include "msma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace msma {

namespace {

struct Candidate
{
    double d2;
    std::size_t index;

    auto operator<(const Candidate& o) const noexcept -> bool
    {
        return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
};

auto squared(std::span<const double> a, std::span<const double> b) -> double
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

auto finish(std::vector<Candidate> found) -> std::vector<Neighbor>
{
    std::sort(found.begin(), found.end());
    std::vector<Neighbor> out;
    out.reserve(found.size());
    for (const auto& c : found) {
        out.push_back({std::sqrt(c.d2), c.index});
    }
    return out;
}

void check_query(std::size_t n, std::size_t d, std::size_t qd, std::size_t k, std::optional<std::size_t> exclude)
{
    if (qd != d) {
        throw DomainError("k-NN query has dimension " + std::to_string(qd) + ", points have " + std::to_string(d));
    }
    const std::size_t available = n - (exclude && *exclude < n ? 1 : 0);
    if (k == 0 || k > available) {
        throw DomainError("k-NN needs 1 <= k <= " + std::to_string(available) + " (k = " + std::to_string(k) + ")");
    }
}

} // namespace

auto euclidean(std::span<const double> a, std::span<const double> b) -> double
{
    return std::sqrt(squared(a, b));
}

KdTree::KdTree(Tensor points, std::size_t leaf_size) : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size))
{
    if (points_.size() == 0) {
        throw DomainError("KdTree needs at least one point");
    }
    if (!points_.all_finite()) {
        throw DomainError("KdTree points must be finite");
    }
    order_.resize(points_.rows());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.rows() / leaf_size_ + 1);
    build(0, order_.size());
}

auto KdTree::build(std::size_t begin, std::size_t end) -> std::size_t
{
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size_) {
        return id;
    }
    // Split the widest coordinate at its median.
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim(); ++j) {
        double lo = points_(order_[begin], j);
        double hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double v = points_(order_[i], j);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > widest) {
            widest = hi - lo;
            axis = j;
        }
    }
    if (widest == 0.0) {
        return id; // all points coincide
    }
    const std::size_t mid = begin + (end - begin) / 2;
    const auto first = order_.begin() + std::ptrdiff_t(begin);
    std::nth_element(first, order_.begin() + std::ptrdiff_t(mid), order_.begin() + std::ptrdiff_t(end),
                     [&](std::size_t a, std::size_t b) { return points_(a, axis) < points_(b, axis); });
    const double split = points_(order_[mid], axis);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

auto KdTree::query(std::span<const double> q, std::size_t k, std::optional<std::size_t> exclude) const
    -> std::vector<Neighbor>
{
    check_query(size(), dim(), q.size(), k, exclude);
    // Max-heap of the best k so far; top is the current k-th.
    std::priority_queue<Candidate> best;
    auto visit = [&](auto&& self, std::size_t id) -> void {
        const Node& node = nodes_[id];
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t p = order_[i];
                if (exclude && p == *exclude) {
                    continue;
                }
                const Candidate c{squared(q, points_.row(p)), p};
                if (best.size() < k) {
                    best.push(c);
                } else if (c < best.top()) {
                    best.pop();
                    best.push(c);
                }
            }
            return;
        }
        // Left holds values <= split, right values >= split.
        const double delta = q[node.axis] - node.split;
        const std::size_t near = delta < 0.0 ? node.left : node.right;
        const std::size_t far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        // Equality keeps ties reachable so the kept set matches brute force.
        if (best.size() < k || delta * delta <= best.top().d2) {
            self(self, far);
        }
    };
    visit(visit, 0);

    std::vector<Candidate> found;
    found.reserve(best.size());
    while (!best.empty()) {
        found.push_back(best.top());
        best.pop();
    }
    return finish(std::move(found));
}

auto knn_brute_force(const Tensor& points, std::span<const double> q, std::size_t k,
                     std::optional<std::size_t> exclude) -> std::vector<Neighbor>
{
    check_query(points.rows(), points.cols(), q.size(), k, exclude);
    std::vector<Candidate> all;
    for (std::size_t p = 0; p < points.rows(); ++p) {
        if (exclude && p == *exclude) {
            continue;
        }
        all.push_back({squared(q, points.row(p)), p});
    }
    std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(k), all.end());
    all.resize(k);
    return finish(std::move(all));
}

} // namespace msma
