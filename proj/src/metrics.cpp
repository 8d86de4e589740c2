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

#include "msma/metrics.hpp"

#include "msma/data_io.hpp"
#include "msma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace msma {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void check(const LabeledScores& ls)
{
    if (ls.inlier.empty() || ls.outlier.empty()) {
        throw DomainError("metrics need at least one inlier and one outlier score");
    }
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(ls.inlier) || !finite(ls.outlier)) {
        throw DomainError("metrics need finite scores");
    }
}

// Cumulative counts at each distinct threshold, largest first, starting
// with +infinity (nothing predicted positive).
struct Sweep
{
    std::vector<double> threshold;
    std::vector<std::size_t> tp; // positives with score >= threshold
    std::vector<std::size_t> fp; // negatives with score >= threshold
};

auto sweep(const std::vector<double>& pos, const std::vector<double>& neg) -> Sweep
{
    std::vector<std::pair<double, bool>> all;
    all.reserve(pos.size() + neg.size());
    for (const double s : pos) {
        all.emplace_back(s, true);
    }
    for (const double s : neg) {
        all.emplace_back(s, false);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    Sweep sw{{inf}, {0}, {0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < all.size();) {
        const double t = all[i].first;
        for (; i < all.size() && all[i].first == t; ++i) {
            (all[i].second ? tp : fp) += 1;
        }
        sw.threshold.push_back(t);
        sw.tp.push_back(tp);
        sw.fp.push_back(fp);
    }
    return sw;
}

auto negated(const std::vector<double>& v) -> std::vector<double>
{
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
    return out;
}

auto pct(double v) -> std::string
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

} // namespace

auto fpr_at_tpr(const LabeledScores& ls, double level) -> ThresholdResult
{
    check(ls);
    if (!(level > 0.0 && level <= 1.0)) {
        throw DomainError("TPR level must lie in (0, 1]");
    }
    const Sweep sw = sweep(ls.inlier, ls.outlier);
    const double n_in = double(ls.inlier.size());
    const double n_out = double(ls.outlier.size());
    for (std::size_t i = 0; i < sw.threshold.size(); ++i) {
        if (double(sw.tp[i]) / n_in >= level) {
            return {double(sw.fp[i]) / n_out, sw.threshold[i]};
        }
    }
    // Unreachable: the smallest threshold has TPR 1.
    return {1.0, sw.threshold.back()};
}

auto detection_error(const LabeledScores& ls) -> ThresholdResult
{
    check(ls);
    const Sweep sw = sweep(ls.inlier, ls.outlier);
    const std::size_t n_in = ls.inlier.size();
    const std::size_t n_out = ls.outlier.size();
    // 0.5 (FN / n_in + FP / n_out) over the common denominator, so that
    // relabelling sides yields bit-identical values.
    const double denom = 2.0 * double(n_in) * double(n_out);
    ThresholdResult best{inf, inf};
    for (std::size_t i = 0; i < sw.threshold.size(); ++i) {
        const double num = double(n_in - sw.tp[i]) * double(n_out) + double(sw.fp[i]) * double(n_in);
        const double err = num / denom;
        if (err < best.value) {
            best = {err, sw.threshold[i]};
        }
    }
    return best;
}

auto auroc(const LabeledScores& ls) -> double
{
    check(ls);
    // Twice the Mann-Whitney U, counted by merging sorted sides.
    std::vector<double> in = ls.inlier;
    std::vector<double> out = ls.outlier;
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    double twice_u = 0.0;
    std::size_t below = 0; // outliers strictly below the current inlier
    std::size_t upto = 0;  // outliers <= the current inlier
    for (const double s : in) {
        while (below < out.size() && out[below] < s) {
            ++below;
        }
        upto = std::max(upto, below);
        while (upto < out.size() && out[upto] <= s) {
            ++upto;
        }
        twice_u += 2.0 * double(below) + double(upto - below);
    }
    return twice_u / (2.0 * double(in.size()) * double(out.size()));
}

auto aupr(const LabeledScores& ls, Positive positive) -> double
{
    check(ls);
    const Sweep sw = positive == Positive::in ? sweep(ls.inlier, ls.outlier)
                                              : sweep(negated(ls.outlier), negated(ls.inlier));
    const double n_pos = double(positive == Positive::in ? ls.inlier.size() : ls.outlier.size());
    double ap = 0.0;
    for (std::size_t i = 1; i < sw.threshold.size(); ++i) {
        const std::size_t gained = sw.tp[i] - sw.tp[i - 1];
        if (gained == 0) {
            continue;
        }
        const double precision = double(sw.tp[i]) / double(sw.tp[i] + sw.fp[i]);
        ap += double(gained) / n_pos * precision;
    }
    return ap;
}

auto confusion_at(const LabeledScores& ls, double threshold) -> Confusion
{
    Confusion c;
    for (const double s : ls.inlier) {
        (s >= threshold ? c.tp : c.fn) += 1;
    }
    for (const double s : ls.outlier) {
        (s >= threshold ? c.fp : c.tn) += 1;
    }
    return c;
}

auto evaluate(const LabeledScores& ls, double fpr_level) -> OodReport
{
    OodReport r;
    r.fpr_level = fpr_level;
    const auto f = fpr_at_tpr(ls, fpr_level);
    r.fpr = f.value;
    r.fpr_threshold = f.threshold;
    r.fpr80 = fpr_at_tpr(ls, 0.80).value;
    const auto d = detection_error(ls);
    r.detection_error = d.value;
    r.detection_threshold = d.threshold;
    r.auroc = auroc(ls);
    r.aupr_in = aupr(ls, Positive::in);
    r.aupr_out = aupr(ls, Positive::out);
    r.n_in = ls.inlier.size();
    r.n_out = ls.outlier.size();
    r.at_detection_threshold = confusion_at(ls, d.threshold);
    return r;
}

auto report_text(const OodReport& r, const std::string& config_hash) -> std::string
{
    std::ostringstream out;
    out << "config_hash = " << config_hash << '\n'
        << "n_in = " << r.n_in << '\n'
        << "n_out = " << r.n_out << '\n'
        << "fpr_level = " << format_double(r.fpr_level) << '\n'
        << "fpr_at_tpr = " << format_double(r.fpr) << '\n'
        << "fpr_threshold = " << format_double(r.fpr_threshold) << '\n'
        << "fpr_at_tpr_80 = " << format_double(r.fpr80) << '\n'
        << "detection_error = " << format_double(r.detection_error) << '\n'
        << "detection_threshold = " << format_double(r.detection_threshold) << '\n'
        << "auroc = " << format_double(r.auroc) << '\n'
        << "aupr_in = " << format_double(r.aupr_in) << '\n'
        << "aupr_out = " << format_double(r.aupr_out) << '\n'
        << "tp = " << r.at_detection_threshold.tp << '\n'
        << "fp = " << r.at_detection_threshold.fp << '\n'
        << "tn = " << r.at_detection_threshold.tn << '\n'
        << "fn = " << r.at_detection_threshold.fn << '\n';
    return out.str();
}

auto table_header(TableLayout layout) -> std::string
{
    return layout == TableLayout::standard ? "Method,FPR@95,DetErr,AUROC,AUPR-In,AUPR-Out"
                                           : "Method,FPR@80,AUROC,AUPR-In";
}

auto table_row(const std::string& method, const OodReport& r, TableLayout layout) -> std::string
{
    if (layout == TableLayout::standard) {
        return method + "," + pct(r.fpr) + "," + pct(r.detection_error) + "," + pct(r.auroc) + ","
               + pct(r.aupr_in) + "," + pct(r.aupr_out);
    }
    return method + "," + pct(r.fpr80) + "," + pct(r.auroc) + "," + pct(r.aupr_in);
}

void append_results_row(const std::filesystem::path& path, const std::string& method, const OodReport& r,
                        TableLayout layout)
{
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw IoError("cannot append to '" + path.string() + "'");
    }
    if (fresh) {
        out << table_header(layout) << '\n';
    }
    out << table_row(method, r, layout) << '\n';
}

} // namespace msma
