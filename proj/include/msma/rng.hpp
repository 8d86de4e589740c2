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

#include <cstdint>
#include <vector>

namespace msma {

// Counter-based generator: output i is a bijective mix of (key, i), so a
// stream is fully described by its key and position. split() derives an
// independent key, which lets parallel batches draw without sharing state.
//
// The distributions are implemented here rather than taken from <random>
// because the std distributions are not bit-reproducible across standard
// libraries.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) noexcept;

    [[nodiscard]] auto next_u64() noexcept -> std::uint64_t;

    // Uniform on [0, 1) with 53 random bits.
    [[nodiscard]] auto uniform() noexcept -> double;

    // Standard normal (Box-Muller, spare value cached).
    [[nodiscard]] auto normal() noexcept -> double;

    // Uniform integer in [0, n); n > 0.
    [[nodiscard]] auto below(std::uint64_t n) noexcept -> std::uint64_t;

    // Independent stream keyed by (this stream's key, stream_id). Does not
    // advance this stream.
    [[nodiscard]] auto split(std::uint64_t stream_id) const noexcept -> Rng;

    [[nodiscard]] auto seed() const noexcept -> std::uint64_t { return seed_; }
    [[nodiscard]] auto position() const noexcept -> std::uint64_t { return counter_; }

    // Fisher-Yates permutation of 0..n-1.
    [[nodiscard]] auto permutation(std::size_t n) -> std::vector<std::size_t>;

private:
    Rng(std::uint64_t seed, std::uint64_t key) noexcept;

    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

auto mix64(std::uint64_t z) noexcept -> std::uint64_t;

} // namespace msma
