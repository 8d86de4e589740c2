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

#include "msma/data_io.hpp"
#include "msma/score_net.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace msma {

// Binary layout, all integers u32 and floats f64, little-endian:
//   "MSMACKPT" version D L depth widths[depth] sigmas[L]
//   has_scaler [offset[D] scale[D]] config_hash(u64) step(u64)
//   parameter_count(u64) parameters...
// Parameters follow ScoreNet::parameters() order, row-major.
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint
{
    ScoreNet net;
    std::optional<FeatureScaler> scaler;
    std::uint64_t config_hash = 0;
    std::uint64_t step = 0;
};

[[nodiscard]] auto encode_checkpoint(const Checkpoint& ckpt) -> std::vector<unsigned char>;
// Throws ParseError (with byte offset) on a bad magic, unknown version,
// truncation or trailing bytes.
[[nodiscard]] auto decode_checkpoint(std::span<const unsigned char> bytes) -> Checkpoint;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] auto load_checkpoint(const std::filesystem::path& path) -> Checkpoint;

} // namespace msma
