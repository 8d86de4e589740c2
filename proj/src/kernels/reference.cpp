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

namespace msma::kernels::reference {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    for (std::size_t i = 0; i < d.m; ++i) {
        for (std::size_t j = 0; j < d.n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < d.k; ++p) {
                s += a[i * d.k + p] * b[p * d.n + j];
            }
            c[i * d.n + j] = accumulate ? c[i * d.n + j] + s : s;
        }
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    for (std::size_t i = 0; i < d.m; ++i) {
        for (std::size_t j = 0; j < d.n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < d.k; ++p) {
                s += a[i * d.k + p] * b[j * d.k + p];
            }
            c[i * d.n + j] = accumulate ? c[i * d.n + j] + s : s;
        }
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate)
{
    for (std::size_t i = 0; i < d.m; ++i) {
        for (std::size_t j = 0; j < d.n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < d.k; ++p) {
                s += a[p * d.m + i] * b[p * d.n + j];
            }
            c[i * d.n + j] = accumulate ? c[i * d.n + j] + s : s;
        }
    }
}

void row_norms(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<double> out)
{
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            s += x[r * cols + j] * x[r * cols + j];
        }
        out[r] = std::sqrt(s);
    }
}

} // namespace msma::kernels::reference
