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

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace msma {

// Higher score = more in-distribution, for both sides. A sample is
// predicted in-distribution when its score is >= the threshold; thresholds
// range over the distinct observed scores plus +infinity.
struct LabeledScores
{
    std::vector<double> inlier;
    std::vector<double> outlier;
};

struct ThresholdResult
{
    double value = 0.0;
    double threshold = 0.0;
};

// FPR at the largest threshold whose TPR reaches `level` (0 < level <= 1).
[[nodiscard]] auto fpr_at_tpr(const LabeledScores& ls, double level = 0.95) -> ThresholdResult;
// min over thresholds of 0.5 (1 - TPR) + 0.5 FPR; ties go to the largest
// threshold.
[[nodiscard]] auto detection_error(const LabeledScores& ls) -> ThresholdResult;
// Mann-Whitney estimate of P(in > out) with ties counted one half.
[[nodiscard]] auto auroc(const LabeledScores& ls) -> double;

enum class Positive
{
    in,
    out
};

// Average precision: sum over thresholds of precision x recall increment.
// Outlier-positive ranks by ascending score.
[[nodiscard]] auto aupr(const LabeledScores& ls, Positive positive) -> double;

struct Confusion
{
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

[[nodiscard]] auto confusion_at(const LabeledScores& ls, double threshold) -> Confusion;

struct OodReport
{
    double fpr_level = 0.95;
    double fpr = 0.0;
    double fpr_threshold = 0.0;
    double fpr80 = 0.0; // FPR at 80% TPR, for the likelihood-model comparison layout
    double detection_error = 0.0;
    double detection_threshold = 0.0;
    double auroc = 0.0;
    double aupr_in = 0.0;
    double aupr_out = 0.0;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    Confusion at_detection_threshold;
};

// Throws DomainError if either side is empty or a score is not finite.
[[nodiscard]] auto evaluate(const LabeledScores& ls, double fpr_level = 0.95) -> OodReport;

// Flat "key = value" text.
[[nodiscard]] auto report_text(const OodReport& r, const std::string& config_hash) -> std::string;

enum class TableLayout
{
    standard,  // FPR@95, DetErr, AUROC, AUPR-In, AUPR-Out
    likelihood // FPR@80, AUROC, AUPR-In
};

[[nodiscard]] auto table_header(TableLayout layout) -> std::string;
// Percentages with two decimals, method name first.
[[nodiscard]] auto table_row(const std::string& method, const OodReport& r, TableLayout layout) -> std::string;
// Appends a row, writing the header first if the file is new or empty.
void append_results_row(const std::filesystem::path& path, const std::string& method, const OodReport& r,
                        TableLayout layout);

} // namespace msma
