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

#include "msma/kernels.hpp"
#include "msma/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using msma::kernels::Dims;

auto filled(std::size_t n, std::uint64_t seed) -> std::vector<double>
{
    msma::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.normal();
    }
    return v;
}

template <bool Parallel>
void bm_gemm(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const Dims d{n, n, n};
    const auto a = filled(n * n, 1);
    const auto b = filled(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            msma::kernels::gemm_nn(a, b, c, d);
        } else {
            msma::kernels::reference::gemm_nn(a, b, c, d);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * n));
}

template <bool Parallel>
void bm_row_norms(benchmark::State& state)
{
    const auto rows = static_cast<std::size_t>(state.range(0));
    const std::size_t cols = 784;
    const auto x = filled(rows * cols, 3);
    std::vector<double> out(rows);
    for (auto _ : state) {
        if constexpr (Parallel) {
            msma::kernels::row_norms(x, rows, cols, out);
        } else {
            msma::kernels::reference::row_norms(x, rows, cols, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(rows));
}

} // namespace

BENCHMARK(bm_gemm<false>)->Name("gemm/reference")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(bm_gemm<true>)->Name("gemm/parallel")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(bm_row_norms<false>)->Name("row_norms/reference")->Range(256, 8192);
BENCHMARK(bm_row_norms<true>)->Name("row_norms/parallel")->Range(256, 8192);

BENCHMARK_MAIN();
