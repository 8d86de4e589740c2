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

#include <cstddef>
#include <span>

// Dense kernels behind the tensor ops. The default versions parallelise
// over output rows with OpenMP; the serial versions in `reference` are the
// textbook loops and exist for cross-checking and benchmarking.
//
// Every output element is produced by one thread with a fixed summation
// order, so results do not depend on the thread count.
namespace msma::kernels {

struct Dims
{
    std::size_t m; // rows of the result
    std::size_t k; // contracted dimension
    std::size_t n; // columns of the result
};

// C = A B         with A m x k, B k x n.
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);
// C = A B^T       with A m x k, B n x k.
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);
// C = A^T B       with A k x m, B k x n.
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);

// out[r] = ||x[r, :]||_2 for a rows x cols matrix.
void row_norms(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<double> out);

// Number of threads OpenMP will use for the parallel kernels.
[[nodiscard]] auto thread_count() noexcept -> int;
void set_thread_count(int n) noexcept;

namespace reference {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, Dims d,
             bool accumulate = false);
void row_norms(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<double> out);

} // namespace reference

} // namespace msma::kernels
