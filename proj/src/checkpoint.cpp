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

#include "msma/checkpoint.hpp"

#include "msma/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string_view>

namespace msma {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::string_view magic = "MSMACKPT";

class Writer
{
public:
    template <typename T>
    void put(T v)
    {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }

    void put_u32(std::size_t v) { put(static_cast<std::uint32_t>(v)); }

    std::vector<unsigned char> bytes;
};

class Reader
{
public:
    explicit Reader(std::span<const unsigned char> b) : bytes_(b) {}

    template <typename T>
    auto get(const char* what) -> T
    {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw ParseError(std::string("checkpoint truncated while reading ") + what, bytes_.size());
        }
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    auto u32(const char* what) -> std::size_t { return get<std::uint32_t>(what); }

    [[nodiscard]] auto pos() const noexcept -> std::size_t { return pos_; }
    [[nodiscard]] auto done() const noexcept -> bool { return pos_ == bytes_.size(); }
    [[nodiscard]] auto rest() const noexcept -> std::span<const unsigned char> { return bytes_.subspan(pos_); }

private:
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

auto encode_checkpoint(const Checkpoint& ckpt) -> std::vector<unsigned char>
{
    const ScoreNet& net = ckpt.net;
    Writer w;
    w.bytes.assign(magic.begin(), magic.end());
    w.put_u32(checkpoint_version);
    w.put_u32(net.dim());
    w.put_u32(net.levels());
    w.put_u32(net.hidden().size());
    for (const auto width : net.hidden()) {
        w.put_u32(width);
    }
    for (const double s : net.schedule().sigmas) {
        w.put(s);
    }
    w.put_u32(ckpt.scaler ? 1 : 0);
    if (ckpt.scaler) {
        if (ckpt.scaler->dim() != net.dim()) {
            throw DomainError("checkpoint scaler dimension does not match the network");
        }
        for (const double v : ckpt.scaler->offset) {
            w.put(v);
        }
        for (const double v : ckpt.scaler->scale) {
            w.put(v);
        }
    }
    w.put(ckpt.config_hash);
    w.put(ckpt.step);
    w.put(static_cast<std::uint64_t>(net.parameter_count()));
    for (const Tensor* p : net.parameters()) {
        for (const double v : p->data()) {
            w.put(v);
        }
    }
    return std::move(w.bytes);
}

auto decode_checkpoint(std::span<const unsigned char> bytes) -> Checkpoint
{
    if (bytes.size() < magic.size() || std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
        throw ParseError("not a checkpoint file (bad magic)", 0);
    }
    Reader r(bytes.subspan(magic.size()));
    const auto at = [&] { return magic.size() + r.pos(); };

    const std::size_t version_at = at();
    if (const auto version = r.u32("version"); version != checkpoint_version) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), version_at);
    }
    const std::size_t dim = r.u32("dimension");
    const std::size_t levels = r.u32("level count");
    const std::size_t depth = r.u32("depth");
    if (dim == 0 || levels == 0 || depth > 64) {
        throw ParseError("implausible checkpoint header", at());
    }
    std::vector<std::size_t> hidden(depth);
    for (auto& width : hidden) {
        width = r.u32("layer width");
    }
    SigmaSchedule schedule;
    schedule.sigmas.resize(levels);
    for (auto& s : schedule.sigmas) {
        s = r.get<double>("sigma");
    }

    Checkpoint ckpt;
    const std::size_t scaler_at = at();
    if (const auto has_scaler = r.u32("scaler flag"); has_scaler > 1) {
        throw ParseError("bad scaler flag", scaler_at);
    } else if (has_scaler == 1) {
        FeatureScaler sc{std::vector<double>(dim), std::vector<double>(dim)};
        for (auto& v : sc.offset) {
            v = r.get<double>("scaler offset");
        }
        for (auto& v : sc.scale) {
            v = r.get<double>("scaler scale");
        }
        ckpt.scaler = std::move(sc);
    }
    ckpt.config_hash = r.get<std::uint64_t>("config hash");
    ckpt.step = r.get<std::uint64_t>("step");

    Rng unused(0);
    try {
        ckpt.net = ScoreNet(dim, schedule, hidden, unused);
    } catch (const DomainError& e) {
        throw ParseError(std::string("invalid network header: ") + e.what(), scaler_at);
    }
    const std::size_t count_at = at();
    if (const auto count = r.get<std::uint64_t>("parameter count"); count != ckpt.net.parameter_count()) {
        throw ParseError("parameter count " + std::to_string(count) + " does not match the header ("
                             + std::to_string(ckpt.net.parameter_count()) + ")",
                         count_at);
    }
    for (Tensor* p : ckpt.net.parameters()) {
        for (auto& v : p->data()) {
            v = r.get<double>("parameters");
        }
    }
    if (!r.done()) {
        throw ParseError("trailing bytes after checkpoint parameters", at());
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    const auto bytes = encode_checkpoint(ckpt);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("cannot write checkpoint '" + path.string() + "'");
    }
}

auto load_checkpoint(const std::filesystem::path& path) -> Checkpoint
{
    return decode_checkpoint(read_file_bytes(path));
}

} // namespace msma
