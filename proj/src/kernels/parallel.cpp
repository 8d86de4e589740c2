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

#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msma::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t parallel_work = std::size_t{1} << 15U;

auto as_signed(std::size_t v) -> std::int64_t { return static_cast<std::int64_t>(v); }

} // namespace

auto thread_count() noexcept -> int
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int n) noexcept
{
#ifdef _OPENMP
    if (n > 0) {
        omp_set_num_threads(n);
    }
#else
    (void)n;
#endif
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    const std::size_t k = d.k;
    const std::size_t n = d.n;

#pragma omp parallel for schedule(static) if (d.m * d.k * d.n > parallel_work)
    for (std::int64_t si = 0; si < as_signed(d.m); ++si) {
        const auto i = static_cast<std::size_t>(si);
        double* crow = pc + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] = 0.0;
            }
        }
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            const double* brow = pb + p * n;
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aip * brow[j];
            }
        }
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    const std::size_t k = d.k;
    const std::size_t n = d.n;

#pragma omp parallel for schedule(static) if (d.m * d.k * d.n > parallel_work)
    for (std::int64_t si = 0; si < as_signed(d.m); ++si) {
        const auto i = static_cast<std::size_t>(si);
        const double* arow = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double s = 0.0;
#pragma omp simd reduction(+ : s)
            for (std::size_t p = 0; p < k; ++p) {
                s += arow[p] * brow[p];
            }
            pc[i * n + j] = accumulate ? pc[i * n + j] + s : s;
        }
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    const std::size_t m = d.m;
    const std::size_t n = d.n;

#pragma omp parallel for schedule(static) if (d.m * d.k * d.n > parallel_work)
    for (std::int64_t si = 0; si < as_signed(m); ++si) {
        const auto i = static_cast<std::size_t>(si);
        double* crow = pc + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] = 0.0;
            }
        }
        for (std::size_t p = 0; p < d.k; ++p) {
            const double api = pa[p * m + i];
            if (api == 0.0) {
                continue;
            }
            const double* brow = pb + p * n;
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += api * brow[j];
            }
        }
    }
}

void row_norms(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<double> out)
{
    const double* __restrict__ px = x.data();
#pragma omp parallel for schedule(static) if (rows * cols > parallel_work)
    for (std::int64_t sr = 0; sr < as_signed(rows); ++sr) {
        const auto r = static_cast<std::size_t>(sr);
        const double* xr = px + r * cols;
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (std::size_t j = 0; j < cols; ++j) {
            s += xr[j] * xr[j];
        }
        out[r] = std::sqrt(s);
    }
}

} // namespace msma::kernels
