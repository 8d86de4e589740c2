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

#include "msma/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace msma {

namespace {

constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

} // namespace

auto mix64(std::uint64_t z) noexcept -> std::uint64_t
{
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

Rng::Rng(std::uint64_t seed) noexcept : Rng(seed, mix64(seed + golden_gamma)) {}

Rng::Rng(std::uint64_t seed, std::uint64_t key) noexcept : seed_(seed), key_(key) {}

auto Rng::next_u64() noexcept -> std::uint64_t
{
    ++counter_;
    return mix64(key_ + counter_ * golden_gamma);
}

auto Rng::uniform() noexcept -> double
{
    return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53;
}

auto Rng::normal() noexcept -> double
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

namespace {
__extension__ using u128 = unsigned __int128;
}

auto Rng::below(std::uint64_t n) noexcept -> std::uint64_t
{
    // Lemire's rejection on the 128-bit product.
    std::uint64_t x = next_u64();
    auto m = static_cast<u128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<u128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64U);
}

auto Rng::split(std::uint64_t stream_id) const noexcept -> Rng
{
    return Rng(seed_, mix64(key_ ^ mix64(stream_id + golden_gamma)));
}

auto Rng::permutation(std::size_t n) -> std::vector<std::size_t>
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

} // namespace msma
