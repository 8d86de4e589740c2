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

#include "msma/autodiff.hpp"
#include "msma/rng.hpp"
#include "msma/tensor.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

namespace msma::test {

// |a - b| <= tol * max(|a|, |b|) + floor
inline auto rel_close(double a, double b, double tol, double floor = 1e-9) -> bool
{
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + floor;
}

inline auto random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) -> Tensor
{
    Tensor t(std::move(shape));
    for (auto& v : t.data()) {
        v = lo + (hi - lo) * rng.uniform();
    }
    return t;
}

inline auto eval_scalar(const std::function<ad::Var(ad::Var)>& f, const Tensor& x) -> double
{
    ad::Tape tape;
    return f(tape.variable(x)).value().item();
}

// Central differences with step h for every coordinate of x.
inline auto finite_difference(const std::function<ad::Var(ad::Var)>& f, const Tensor& x, double h = 1e-5)
    -> Tensor
{
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor xp = x;
        Tensor xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (eval_scalar(f, xp) - eval_scalar(f, xm)) / (2.0 * h);
    }
    return g;
}

// Fresh empty directory under the build tree's temp area.
inline auto scratch_dir(const std::string& name) -> std::filesystem::path
{
    const auto dir = std::filesystem::temp_directory_path() / ("msma_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace msma::test
