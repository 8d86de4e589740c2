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

#include "msma/mixture.hpp"
#include "msma/rng.hpp"
#include "msma/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msma {

struct Dataset
{
    Tensor samples; // N x D, row-major flattened samples
    std::string name;
    std::string split = "train";
    std::string fingerprint;
    std::vector<std::uint8_t> labels; // empty unless loaded

    [[nodiscard]] auto size() const noexcept -> std::size_t { return samples.rows(); }
};

// 64-bit FNV-1a, rendered as 16 hex digits.
[[nodiscard]] auto fnv1a64(std::span<const unsigned char> bytes) noexcept -> std::uint64_t;
[[nodiscard]] auto hex64(std::uint64_t v) -> std::string;
[[nodiscard]] auto fnv1a_hex(std::span<const unsigned char> bytes) -> std::string;
[[nodiscard]] auto fnv1a_hex(const std::string& text) -> std::string;
[[nodiscard]] auto content_fingerprint(const Tensor& t) -> std::string;

// IDX (big-endian, magic 0x00000803 for images, 0x00000801 for labels).
// Pixels are divided by 255. Throws ParseError with the byte offset on bad
// magic, truncation or an image/label count mismatch, DomainError when the
// file holds no images.
[[nodiscard]] auto load_idx(const std::filesystem::path& images,
                            const std::optional<std::filesystem::path>& labels = std::nullopt) -> Dataset;
[[nodiscard]] auto parse_idx_images(std::span<const unsigned char> bytes) -> Tensor;
[[nodiscard]] auto parse_idx_labels(std::span<const unsigned char> bytes) -> std::vector<std::uint8_t>;

// Writes N images of rows x cols 8-bit pixels (values in [0,1], rounded).
void write_idx_images(const std::filesystem::path& path, const Tensor& pixels, std::size_t rows,
                      std::size_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Generic tabular data: one header line, then comma-separated numbers.
// Lines starting with '#' are comments.
struct CsvMatrix
{
    std::vector<std::string> header;
    Tensor values;
    std::vector<std::string> comments; // without the leading '#'
};

[[nodiscard]] auto read_csv_matrix(const std::filesystem::path& path) -> CsvMatrix;
void write_csv_matrix(const std::filesystem::path& path, const CsvMatrix& csv);
[[nodiscard]] auto format_double(double v) -> std::string;

// i.i.d. U[0,1] pixels; sample_shape is the per-sample shape (flattened).
[[nodiscard]] auto gen_uniform_noise(std::size_t n, const Shape& sample_shape, Rng& rng) -> Dataset;
// i.i.d. N(0.5, 1) pixels clipped to [0,1].
[[nodiscard]] auto gen_gaussian_noise(std::size_t n, const Shape& sample_shape, Rng& rng) -> Dataset;
[[nodiscard]] auto sample_mixture(const GaussianMixture& gm, std::size_t n, Rng& rng) -> Dataset;

// Per-feature affine map x' = (x - offset) * scale.
struct FeatureScaler
{
    std::vector<double> offset;
    std::vector<double> scale;

    // Maps the training range of each feature onto [0, 1]; constant
    // features get scale 1.
    static auto fit_minmax(const Tensor& x) -> FeatureScaler;
    static auto identity(std::size_t dim) -> FeatureScaler;

    [[nodiscard]] auto apply(const Tensor& x) const -> Tensor;
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return offset.size(); }

    friend auto operator==(const FeatureScaler&, const FeatureScaler&) -> bool = default;
};

[[nodiscard]] auto read_file_bytes(const std::filesystem::path& path) -> std::vector<unsigned char>;
[[nodiscard]] auto read_text_file(const std::filesystem::path& path) -> std::string;
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace msma
