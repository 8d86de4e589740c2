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

#include "helpers.hpp"

#include "msma/errors.hpp"
#include "msma/noise_schedule.hpp"

#include <limits>

using namespace msma;
using msma::test::random_tensor;

TEST_SUITE("noise-schedule")
{
    TEST_CASE("default schedule endpoints and ratio")
    {
        const SigmaSchedule s = make_schedule(1.0, 0.01, 10);
        REQUIRE(s.levels() == 10);
        CHECK(s.sigmas.front() == 1.0);
        CHECK(s.sigmas.back() == 0.01);
        const double ratio = std::pow(10.0, -2.0 / 9.0);
        CHECK(ratio == doctest::Approx(0.599484).epsilon(1e-6));
        for (std::size_t i = 0; i + 1 < s.levels(); ++i) {
            CHECK(s.sigmas[i + 1] / s.sigmas[i] == doctest::Approx(ratio).epsilon(1e-12));
            CHECK(s.sigmas[i + 1] < s.sigmas[i]);
        }
        CHECK(preset_schedule("ncsn-default") == s);
        CHECK_THROWS_AS((void)preset_schedule("nope"), DomainError);
    }

    TEST_CASE("short schedules")
    {
        CHECK(make_schedule(1.0, 0.01, 2).sigmas == std::vector<double>{1.0, 0.01});
        CHECK(make_schedule(1.0, 0.01, 1).sigmas == std::vector<double>{1.0});
        CHECK(make_schedule(2.0, 2.0, 1).sigmas == std::vector<double>{2.0});
    }

    TEST_CASE("invalid schedules are rejected")
    {
        CHECK_THROWS_AS((void)make_schedule(0.01, 1.0, 10), DomainError);
        CHECK_THROWS_AS((void)make_schedule(1.0, 0.0, 10), DomainError);
        CHECK_THROWS_AS((void)make_schedule(1.0, 0.01, 0), DomainError);
    }

    TEST_CASE("log sigmas form an arithmetic progression")
    {
        Rng rng(8);
        for (int t = 0; t < 100; ++t) {
            const double lo = std::exp(-6.0 * rng.uniform());
            const double hi = lo * std::exp(5.0 * rng.uniform());
            const std::size_t levels = 2 + rng.below(30);
            const SigmaSchedule s = make_schedule(hi, lo, levels);
            const double step = std::log(s.sigmas[1]) - std::log(s.sigmas[0]);
            for (std::size_t i = 1; i < levels; ++i) {
                REQUIRE(std::abs(std::log(s.sigmas[i]) - std::log(s.sigmas[i - 1]) - step) < 1e-10);
            }
        }
    }

    TEST_CASE("zero noise leaves the batch clean with zero target")
    {
        const SigmaSchedule s = make_schedule(1.0, 0.01, 3);
        const Tensor clean = Tensor::from_rows({{0.2, 0.4}, {0.6, 0.8}});
        const PerturbedBatch pb = perturb_with(clean, s, {0, 2}, Tensor({2, 2}, 0.0));
        CHECK(pb.noisy == clean);
        for (const double v : pb.target.data()) {
            CHECK(v == 0.0);
        }
    }

    TEST_CASE("target arithmetic")
    {
        const SigmaSchedule s{{0.1}};
        const PerturbedBatch pb = perturb_with(Tensor::from_rows({{0.0}}), s, {0}, Tensor::from_rows({{5.0}}));
        CHECK(pb.noisy(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(pb.target(0, 0) == doctest::Approx(-50.0).epsilon(1e-12));
    }

    TEST_CASE("perturb noise has unit variance at sigma 1 and exact targets")
    {
        const SigmaSchedule s{{1.0}};
        Rng rng(31);
        const Tensor clean = random_tensor(rng, {10000, 3});
        const PerturbedBatch pb = perturb(clean, s, rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            const double d = pb.noisy[i] - clean[i];
            acc += d * d;
        }
        const double per_dim = acc / double(clean.size());
        CHECK(per_dim >= 0.97);
        CHECK(per_dim <= 1.03);

        const SigmaSchedule multi = make_schedule(1.0, 0.01, 10);
        const PerturbedBatch pm = perturb(clean, multi, rng);
        std::vector<std::size_t> counts(10, 0);
        for (std::size_t b = 0; b < clean.rows(); ++b) {
            REQUIRE(pm.level_index[b] < 10);
            ++counts[pm.level_index[b]];
            const double sigma = multi.sigmas[pm.level_index[b]];
            for (std::size_t j = 0; j < clean.cols(); ++j) {
                const double diff = pm.noisy(b, j) - pm.clean(b, j);
                REQUIRE(pm.target(b, j) == -diff / (sigma * sigma));
                // target * sigma^2 undoes the division up to one rounding.
                REQUIRE(std::abs(pm.target(b, j) * sigma * sigma + diff) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(diff));
            }
        }
        for (const auto c : counts) {
            CHECK(c > 850);
            CHECK(c < 1150);
        }
    }
}
