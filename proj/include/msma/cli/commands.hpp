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

#include "msma/cli/config.hpp"
#include "msma/metrics.hpp"
#include "msma/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace msma::cli {

enum ExitCode : int
{
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_numerical = 3,
    exit_io = 4
};

// Entry point shared by the executable and in-process tests. args[0] is
// the program name. Errors are reported on err and mapped to an ExitCode.
[[nodiscard]] auto run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) -> int;

// Default artifact locations inside cfg.output_dir.
[[nodiscard]] auto checkpoint_path(const RunConfig& cfg) -> std::filesystem::path;
[[nodiscard]] auto norms_path(const RunConfig& cfg, const std::string& split) -> std::filesystem::path;
[[nodiscard]] auto outlier_split(std::size_t index) -> std::string; // "outlier_1", ...
[[nodiscard]] auto aux_model_path(const RunConfig& cfg, AuxVariant variant) -> std::filesystem::path;

// Writes checkpoint.msma and loss.csv.
void cmd_train(const RunConfig& cfg, std::ostream& out);

// Writes norms_<split>.csv (plus sidecar) for train, test and every
// outlier set present in the config. Without a checkpoint the scores come
// from the oracle mixture.
void cmd_norms(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint, std::ostream& out);

// Fits the configured variant on a norms file (default norms_train.csv).
void cmd_fit_aux(const RunConfig& cfg, const std::optional<std::filesystem::path>& norms, std::ostream& out);

struct EvalRequest
{
    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> inliers;
    std::vector<std::filesystem::path> outliers;
};

struct EvalResult
{
    OodReport pooled; // one threshold for all outlier sets together
    std::vector<std::pair<std::string, OodReport>> per_outlier;
};

// Writes report_<variant>.txt and results_<variant>.csv.
auto cmd_eval(const RunConfig& cfg, const EvalRequest& request, std::ostream& out) -> EvalResult;

// Writes toy_analysis.csv, toy_samples.csv and toy_scenario.json.
void cmd_toy(const RunConfig& cfg, std::ostream& out);

// Full pipeline per grid value; writes sweep.csv plus one sub-directory
// per grid point.
void cmd_sweep(const RunConfig& cfg, std::ostream& out);

// Writes verify.csv with one row per noise level.
auto cmd_verify(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                const std::optional<std::filesystem::path>& mixture, std::ostream& out)
    -> std::vector<FidelityRow>;

} // namespace msma::cli
