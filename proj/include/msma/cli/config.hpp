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

#include "msma/aux_model.hpp"
#include "msma/metrics.hpp"
#include "msma/noise_schedule.hpp"
#include "msma/pipeline.hpp"
#include "msma/score_net.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace msma::cli {

inline constexpr int config_version = 1;
inline constexpr const char* output_root_env = "MSMA_OUTPUT_ROOT";

// Effective settings of one run. Built from an INI file whose keys live
// in the sections [data] [schedule] [train] [norms] [aux] [eval] [toy]
// [sweep] plus top-level `version`, `seed` and `output_dir`.
struct RunConfig
{
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::filesystem::path base_dir; // relative dataset paths resolve here

    // Dataset specs, see load_dataset().
    std::string train_data;
    std::string test_data;
    std::vector<std::string> outlier_data;
    bool rescale = true;     // min-max map fitted on the training set
    std::string oracle_path; // mixture JSON for analytic scores and verify

    double sigma_high = 1.0;
    double sigma_low = 0.01;
    std::size_t levels = 10;

    std::vector<std::size_t> hidden{ScoreNet::default_width, ScoreNet::default_width, ScoreNet::default_width};
    TrainConfig train{};

    NormOptions norms{};
    AuxOptions aux{};

    double fpr_level = 0.95;
    TableLayout layout = TableLayout::standard;

    std::string toy_scenario; // empty = built-in scenario
    std::size_t toy_samples = 200;

    std::string sweep_vary = "levels"; // levels | sigma_high
    std::vector<double> sweep_values{1, 3, 10, 15, 20};
    std::vector<AuxVariant> sweep_variants{AuxVariant::gmm};

    // Canonical "section.key=value" lines the hash is computed from.
    std::map<std::string, std::string> entries;
    std::string hash;

    [[nodiscard]] auto schedule() const -> SigmaSchedule { return make_schedule(sigma_high, sigma_low, levels); }
};

// Parses INI text. `overrides` are "section.key=value" strings applied on
// top of the file (top-level keys have no section). Throws ConfigError on
// unknown keys, bad values, a missing seed or version, or dataset files
// that do not exist.
[[nodiscard]] auto parse_config(const std::string& text, const std::filesystem::path& base_dir,
                                const std::vector<std::string>& overrides = {}) -> RunConfig;
[[nodiscard]] auto load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {})
    -> RunConfig;

// Re-derives a config after changing entries (used by sweeps).
[[nodiscard]] auto with_overrides(const RunConfig& base, const std::vector<std::string>& overrides) -> RunConfig;

// Renders the canonical entries back to INI text.
[[nodiscard]] auto to_ini(const RunConfig& cfg) -> std::string;

// Dataset spec strings:
//   csv:PATH                    numeric CSV with a header row
//   idx:IMAGES[:LABELS]         IDX image file, optional labels
//   mixture:JSON:N:SEED         samples from a Gaussian mixture file
//   uniform:N:D:SEED            U[0,1] noise
//   gaussian:N:D:SEED           N(0.5, 1) noise clipped to [0,1]
[[nodiscard]] auto load_dataset(const std::string& spec, const std::filesystem::path& base_dir) -> Dataset;
// Paths referenced by a spec (for existence checks).
[[nodiscard]] auto dataset_paths(const std::string& spec, const std::filesystem::path& base_dir)
    -> std::vector<std::filesystem::path>;

} // namespace msma::cli
