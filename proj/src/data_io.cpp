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

#include "msma/data_io.hpp"

#include "msma/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace msma {

namespace {

constexpr std::uint32_t idx_images_magic = 0x00000803;
constexpr std::uint32_t idx_labels_magic = 0x00000801;

auto read_be32(std::span<const unsigned char> bytes, std::size_t offset) -> std::uint32_t
{
    if (offset + 4 > bytes.size()) {
        throw ParseError("IDX header truncated", bytes.size());
    }
    return (std::uint32_t(bytes[offset]) << 24U) | (std::uint32_t(bytes[offset + 1]) << 16U)
           | (std::uint32_t(bytes[offset + 2]) << 8U) | std::uint32_t(bytes[offset + 3]);
}

void put_be32(std::ostream& out, std::uint32_t v)
{
    const char b[4] = {char((v >> 24U) & 0xFFU), char((v >> 16U) & 0xFFU), char((v >> 8U) & 0xFFU),
                       char(v & 0xFFU)};
    out.write(b, 4);
}

auto to_bytes(const Tensor& t) -> std::span<const unsigned char>
{
    return {reinterpret_cast<const unsigned char*>(t.data().data()), t.size() * sizeof(double)};
}

auto trim(std::string_view s) -> std::string_view
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

auto split_csv(std::string_view line) -> std::vector<std::string_view>
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

auto generated(Tensor samples, std::string name, const std::string& provenance) -> Dataset
{
    Dataset ds;
    ds.samples = std::move(samples);
    ds.name = std::move(name);
    ds.fingerprint = provenance + ":" + content_fingerprint(ds.samples);
    return ds;
}

} // namespace

auto fnv1a64(std::span<const unsigned char> bytes) noexcept -> std::uint64_t
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

auto hex64(std::uint64_t v) -> std::string
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

auto fnv1a_hex(std::span<const unsigned char> bytes) -> std::string
{
    return hex64(fnv1a64(bytes));
}

auto fnv1a_hex(const std::string& text) -> std::string
{
    return fnv1a_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

auto content_fingerprint(const Tensor& t) -> std::string
{
    return "fnv1a64=" + fnv1a_hex(to_bytes(t));
}

auto read_file_bytes(const std::filesystem::path& path) -> std::vector<unsigned char>
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

auto read_text_file(const std::filesystem::path& path) -> std::string
{
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("short write to '" + path.string() + "'");
    }
}

auto parse_idx_images(std::span<const unsigned char> bytes) -> Tensor
{
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != idx_images_magic) {
        throw ParseError("not an IDX image file (magic " + std::to_string(magic) + ")", 0);
    }
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t rows = read_be32(bytes, 8);
    const std::size_t cols = read_be32(bytes, 12);
    if (n == 0) {
        throw DomainError("IDX image file holds no images");
    }
    if (rows == 0 || cols == 0) {
        throw ParseError("IDX image dimensions must be positive", 8);
    }
    const std::size_t header = 16;
    const std::size_t payload = n * rows * cols;
    if (bytes.size() < header + payload) {
        throw ParseError("IDX image payload truncated: expected " + std::to_string(payload) + " bytes",
                         bytes.size());
    }
    Tensor out = Tensor::matrix(n, rows * cols);
    for (std::size_t i = 0; i < payload; ++i) {
        out[i] = static_cast<double>(bytes[header + i]) / 255.0;
    }
    return out;
}

auto parse_idx_labels(std::span<const unsigned char> bytes) -> std::vector<std::uint8_t>
{
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != idx_labels_magic) {
        throw ParseError("not an IDX label file (magic " + std::to_string(magic) + ")", 0);
    }
    const std::size_t n = read_be32(bytes, 4);
    if (bytes.size() < 8 + n) {
        throw ParseError("IDX label payload truncated", bytes.size());
    }
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

auto load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels)
    -> Dataset
{
    const auto bytes = read_file_bytes(images);
    Dataset ds;
    ds.samples = parse_idx_images(bytes);
    ds.name = images.filename().string();
    ds.fingerprint = "idx:fnv1a64=" + fnv1a_hex(bytes);
    if (labels) {
        const auto label_bytes = read_file_bytes(*labels);
        ds.labels = parse_idx_labels(label_bytes);
        if (ds.labels.size() != ds.samples.rows()) {
            throw ParseError("label count " + std::to_string(ds.labels.size()) + " does not match image count "
                                 + std::to_string(ds.samples.rows()),
                             4);
        }
    }
    return ds;
}

void write_idx_images(const std::filesystem::path& path, const Tensor& pixels, std::size_t rows,
                      std::size_t cols)
{
    if (pixels.cols() != rows * cols) {
        throw DomainError("write_idx_images: row width does not match image dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    put_be32(out, idx_images_magic);
    put_be32(out, static_cast<std::uint32_t>(pixels.rows()));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    for (const double v : pixels.data()) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    put_be32(out, idx_labels_magic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

auto format_double(double v) -> std::string
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

auto read_csv_matrix(const std::filesystem::path& path) -> CsvMatrix
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    CsvMatrix csv;
    std::vector<double> values;
    std::string line;
    std::size_t offset = 0;
    std::size_t data_rows = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        if (body.front() == '#') {
            csv.comments.emplace_back(trim(body.substr(1)));
            continue;
        }
        const auto fields = split_csv(body);
        if (!have_header) {
            for (const auto f : fields) {
                csv.header.emplace_back(f);
            }
            have_header = true;
            continue;
        }
        if (fields.size() != csv.header.size()) {
            throw ParseError("CSV row has " + std::to_string(fields.size()) + " fields, header has "
                                 + std::to_string(csv.header.size()),
                             line_offset);
        }
        for (const auto f : fields) {
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw ParseError("bad number '" + std::string(f) + "' in CSV", line_offset);
            }
            values.push_back(v);
        }
        ++data_rows;
    }
    if (!have_header || data_rows == 0) {
        throw DomainError("CSV '" + path.string() + "' has no data rows");
    }
    csv.values = Tensor({data_rows, csv.header.size()}, std::move(values));
    return csv;
}

void write_csv_matrix(const std::filesystem::path& path, const CsvMatrix& csv)
{
    std::ostringstream out;
    for (const auto& c : csv.comments) {
        out << "# " << c << '\n';
    }
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
        out << (j ? "," : "") << csv.header[j];
    }
    out << '\n';
    const Tensor& t = csv.values;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            out << (c ? "," : "") << format_double(t(r, c));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

auto gen_uniform_noise(std::size_t n, const Shape& sample_shape, Rng& rng) -> Dataset
{
    if (n == 0) {
        throw DomainError("gen_uniform_noise: n must be positive");
    }
    const std::uint64_t seed = rng.seed();
    const std::uint64_t position = rng.position();
    Tensor t = Tensor::matrix(n, shape_product(sample_shape));
    for (auto& v : t.data()) {
        v = rng.uniform();
    }
    return generated(std::move(t), "uniform",
                     "gen:uniform:seed=" + std::to_string(seed) + "@" + std::to_string(position));
}

auto gen_gaussian_noise(std::size_t n, const Shape& sample_shape, Rng& rng) -> Dataset
{
    if (n == 0) {
        throw DomainError("gen_gaussian_noise: n must be positive");
    }
    const std::uint64_t seed = rng.seed();
    const std::uint64_t position = rng.position();
    Tensor t = Tensor::matrix(n, shape_product(sample_shape));
    for (auto& v : t.data()) {
        v = std::clamp(0.5 + rng.normal(), 0.0, 1.0);
    }
    return generated(std::move(t), "gaussian",
                     "gen:gaussian:seed=" + std::to_string(seed) + "@" + std::to_string(position));
}

auto sample_mixture(const GaussianMixture& gm, std::size_t n, Rng& rng) -> Dataset
{
    const std::uint64_t seed = rng.seed();
    const std::uint64_t position = rng.position();
    return generated(sample_mixture_values(gm, n, rng), "mixture",
                     "gen:mixture:seed=" + std::to_string(seed) + "@" + std::to_string(position));
}

auto FeatureScaler::fit_minmax(const Tensor& x) -> FeatureScaler
{
    const std::size_t d = x.cols();
    FeatureScaler s{std::vector<double>(d), std::vector<double>(d, 1.0)};
    for (std::size_t j = 0; j < d; ++j) {
        double lo = x(0, j);
        double hi = x(0, j);
        for (std::size_t r = 1; r < x.rows(); ++r) {
            lo = std::min(lo, x(r, j));
            hi = std::max(hi, x(r, j));
        }
        s.offset[j] = lo;
        s.scale[j] = hi > lo ? 1.0 / (hi - lo) : 1.0;
    }
    return s;
}

auto FeatureScaler::identity(std::size_t dim) -> FeatureScaler
{
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

auto FeatureScaler::apply(const Tensor& x) const -> Tensor
{
    if (x.cols() != dim()) {
        throw DomainError("FeatureScaler: expected " + std::to_string(dim()) + " features, got "
                          + std::to_string(x.cols()));
    }
    Tensor out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out(r, j) = (x(r, j) - offset[j]) * scale[j];
        }
    }
    return out;
}

} // namespace msma
