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

#include "msma/metrics.hpp"
#include "msma/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

// Exhaustive reference implementations: every threshold (each distinct
// score plus +infinity) is evaluated by direct counting, every (in, out)
// pair is compared. Quadratic, for small instances only.
namespace msma::oracle {

struct Counts
{
    std::size_t tp = 0;
    std::size_t fp = 0;
};

inline auto thresholds_desc(const LabeledScores& ls) -> std::vector<double>
{
    std::vector<double> t = ls.inlier;
    t.insert(t.end(), ls.outlier.begin(), ls.outlier.end());
    t.push_back(std::numeric_limits<double>::infinity());
    std::sort(t.begin(), t.end(), std::greater<>());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

inline auto count_at(const std::vector<double>& pos, const std::vector<double>& neg, double t) -> Counts
{
    Counts c;
    for (const double s : pos) {
        c.tp += s >= t ? 1 : 0;
    }
    for (const double s : neg) {
        c.fp += s >= t ? 1 : 0;
    }
    return c;
}

inline auto fpr_at_tpr(const LabeledScores& ls, double level) -> ThresholdResult
{
    const double n_in = double(ls.inlier.size());
    const double n_out = double(ls.outlier.size());
    ThresholdResult best{1.0, -std::numeric_limits<double>::infinity()};
    for (const double t : thresholds_desc(ls)) {
        const Counts c = count_at(ls.inlier, ls.outlier, t);
        if (double(c.tp) / n_in >= level && t > best.threshold) {
            best = {double(c.fp) / n_out, t};
        }
    }
    return best;
}

inline auto detection_error(const LabeledScores& ls) -> ThresholdResult
{
    const std::size_t n_in = ls.inlier.size();
    const std::size_t n_out = ls.outlier.size();
    ThresholdResult best{std::numeric_limits<double>::infinity(), 0.0};
    for (const double t : thresholds_desc(ls)) {
        const Counts c = count_at(ls.inlier, ls.outlier, t);
        const double err = (double(n_in - c.tp) * double(n_out) + double(c.fp) * double(n_in))
                           / (2.0 * double(n_in) * double(n_out));
        // Strictly better, or equal at a larger threshold.
        if (err < best.value || (err == best.value && t > best.threshold)) {
            best = {err, t};
        }
    }
    return best;
}

inline auto auroc(const LabeledScores& ls) -> double
{
    std::size_t twice = 0;
    for (const double a : ls.inlier) {
        for (const double b : ls.outlier) {
            twice += a > b ? 2 : (a == b ? 1 : 0);
        }
    }
    return double(twice) / (2.0 * double(ls.inlier.size()) * double(ls.outlier.size()));
}

// Precision-recall curve built point by point, summed as
// sum (recall_i - recall_{i-1}) * precision_i.
inline auto aupr(const LabeledScores& ls, Positive positive) -> double
{
    std::vector<double> pos = positive == Positive::in ? ls.inlier : ls.outlier;
    std::vector<double> neg = positive == Positive::in ? ls.outlier : ls.inlier;
    if (positive == Positive::out) {
        for (auto& v : pos) {
            v = -v;
        }
        for (auto& v : neg) {
            v = -v;
        }
    }
    const LabeledScores oriented{pos, neg};
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (const double t : thresholds_desc(oriented)) {
        const Counts c = count_at(pos, neg, t);
        if (c.tp > prev_tp) {
            const double precision = double(c.tp) / double(c.tp + c.fp);
            ap += double(c.tp - prev_tp) / double(pos.size()) * precision;
        }
        prev_tp = c.tp;
    }
    return ap;
}

// Small instance with injected ties: scores drawn from a short grid so
// equal values within and across sides are common.
inline auto random_instance(Rng& rng, std::size_t max_per_side = 12) -> LabeledScores
{
    LabeledScores ls;
    const std::size_t n_in = 1 + rng.below(max_per_side);
    const std::size_t n_out = 1 + rng.below(max_per_side);
    const double grid = 1.0 + double(rng.below(8));
    auto draw = [&](double shift) { return std::floor((rng.uniform() + shift) * grid) / grid; };
    const double shift = rng.uniform();
    for (std::size_t i = 0; i < n_in; ++i) {
        ls.inlier.push_back(draw(shift));
    }
    for (std::size_t i = 0; i < n_out; ++i) {
        ls.outlier.push_back(draw(0.0));
    }
    // Force at least one cross-side tie.
    ls.outlier[rng.below(n_out)] = ls.inlier[rng.below(n_in)];
    return ls;
}

} // namespace msma::oracle
