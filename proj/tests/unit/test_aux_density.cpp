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

#include "msma/aux_model.hpp"
#include "msma/data_io.hpp"
#include "msma/errors.hpp"
#include "msma/log.hpp"
#include "msma/mixture.hpp"

#include <numbers>
#include <utility>

using namespace msma;
using msma::test::random_tensor;

namespace {

auto two_blobs(Rng& rng, std::size_t n_each) -> Tensor
{
    const GaussianMixture gm = make_mixture({0.5, 0.5}, {{0.0, 0.0}, {5.0, 5.0}}, {{0.01, 0.01}, {0.01, 0.01}});
    return sample_mixture_values(gm, 2 * n_each, rng);
}

auto quick_flow() -> FlowOptions
{
    FlowOptions f;
    f.hidden = {16, 16};
    f.epochs = 5;
    f.batch_size = 32;
    return f;
}

} // namespace

TEST_SUITE("aux-density")
{
    TEST_CASE("single gaussian MLE")
    {
        Rng rng(1);
        const EmResult r = fit_em(Tensor::from_rows({{0.0}, {2.0}}), 1, rng, {});
        CHECK(r.model.means()[0][0] == doctest::Approx(1.0));
        CHECK(r.model.covariances()[0][0] == doctest::Approx(1.0));
    }

    TEST_CASE("em log-likelihood never decreases")
    {
        Rng rng(2);
        const GaussianMixture gm =
            make_mixture({0.3, 0.3, 0.4}, {{0.0, 0.0, 0.0}, {1.0, 2.0, 0.0}, {-1.0, 1.0, 2.0}},
                         {{0.5, 0.2, 0.3}, {0.4, 0.4, 0.4}, {1.0, 0.1, 0.5}});
        const Tensor x = sample_mixture_values(gm, 600, rng);
        for (const std::size_t k : {1, 2, 3, 5, 8}) {
            for (int rep = 0; rep < 3; ++rep) {
                const EmResult r = fit_em_once(x, k, rng, {});
                REQUIRE(r.log_likelihood.size() >= 2);
                for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
                    REQUIRE(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9);
                }
                CHECK(r.log_likelihood.back() == doctest::Approx(mean_log_likelihood(r.model, x)).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("gmm density matches a direct evaluation")
    {
        const Gmm g({0.25, 0.75}, {{0.0, 1.0}, {2.0, -1.0}}, {{1.0, 0.5, 0.5, 2.0}, {0.5, 0.0, 0.0, 0.25}});
        const std::vector<double> x{0.5, 0.3};
        // Component 1 by hand: det = 1.75, inverse = [[2, -.5], [-.5, 1]] / 1.75.
        const double dx = 0.5;
        const double dy = -0.7;
        const double q1 = (2.0 * dx * dx - 2.0 * 0.5 * dx * dy + 1.0 * dy * dy) / 1.75;
        const double p1 = std::exp(-0.5 * q1) / (2.0 * std::numbers::pi * std::sqrt(1.75));
        const double q2 = (0.5 - 2.0) * (0.5 - 2.0) / 0.5 + (0.3 + 1.0) * (0.3 + 1.0) / 0.25;
        const double p2 = std::exp(-0.5 * q2) / (2.0 * std::numbers::pi * std::sqrt(0.5 * 0.25));
        CHECK(g.log_density(x) == doctest::Approx(std::log(0.25 * p1 + 0.75 * p2)).epsilon(1e-12));
        CHECK_THROWS_AS(Gmm({1.0}, {{0.0, 0.0}}, {{1.0, 2.0, 2.0, 1.0}}), DomainError);
    }

    TEST_CASE("model selection picks two components on two blobs")
    {
        Rng rng(3);
        const Tensor x = two_blobs(rng, 200);
        Rng sel(4);
        const GmmSelection s = select_components(x, 1, 2, 5, sel, {});
        CHECK(s.selected_k == 2);
        REQUIRE(s.trace.size() == 2);
        CHECK(s.trace[0].fold_log_likelihood.size() == 5);
        Rng again(4);
        const GmmSelection s2 = select_components(x, 1, 2, 5, again, {});
        CHECK(s2.trace[1].mean_heldout_log_likelihood == s.trace[1].mean_heldout_log_likelihood);

        Rng fit_rng(5);
        const EmResult r = fit_em(x, 2, fit_rng, {});
        std::vector<double> m0 = r.model.means()[0];
        std::vector<double> m1 = r.model.means()[1];
        if (m0[0] > m1[0]) {
            std::swap(m0, m1);
        }
        CHECK(std::abs(m0[0]) < 0.1);
        CHECK(std::abs(m0[1]) < 0.1);
        CHECK(std::abs(m1[0] - 5.0) < 0.1);
        CHECK(std::abs(m1[1] - 5.0) < 0.1);

        Rng small(6);
        CHECK_THROWS_AS((void)select_components(x.gather_rows(std::vector<std::size_t>{0, 1, 2}), 1, 2, 5, small, {}),
                        DomainError);
    }

    TEST_CASE("degenerate data hits the variance floor with a warning")
    {
        Tensor x({40, 2});
        for (std::size_t r = 0; r < 40; ++r) {
            x(r, 0) = double(r % 2);
            x(r, 1) = 3.0;
        }
        std::vector<std::string> warnings;
        const auto prev = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
        AuxOptions opt;
        opt.gmm_k_min = 2;
        opt.gmm_k_max = 2;
        const AuxModel m = AuxModel::fit(x, opt);
        set_warning_sink(prev);
        CHECK_FALSE(warnings.empty());
        CHECK(std::isfinite(m.inlier_score(x.row(0))));
    }

    TEST_CASE("gmm inlier scores order typical rows first and ignore centering")
    {
        Rng rng(7);
        const Tensor x = two_blobs(rng, 150);
        AuxOptions opt;
        opt.gmm_k_min = 2;
        opt.gmm_k_max = 2;
        opt.seed = 9;
        const AuxModel m = AuxModel::fit(x, opt);
        const std::size_t dominant = m.gmm().weights()[0] >= m.gmm().weights()[1] ? 0 : 1;
        std::vector<double> at_mean = m.gmm().means()[dominant];
        for (std::size_t j = 0; j < 2; ++j) {
            at_mean[j] += m.preprocessing().mean[j];
        }
        std::vector<double> far = at_mean;
        far[0] += 10.0 * 2.5; // ten column standard deviations
        CHECK(m.inlier_score(at_mean) >= m.inlier_score(far));

        Tensor centered = x;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t j = 0; j < 2; ++j) {
                centered(r, j) -= m.preprocessing().mean[j];
            }
        }
        const AuxModel mc = AuxModel::fit(centered, opt);
        const Tensor q = random_tensor(rng, {30, 2}, -1.0, 6.0);
        for (std::size_t r = 0; r < q.rows(); ++r) {
            std::vector<double> qc(q.row(r).begin(), q.row(r).end());
            for (std::size_t j = 0; j < 2; ++j) {
                qc[j] -= m.preprocessing().mean[j];
            }
            CHECK(std::abs(m.inlier_score(q.row(r)) - mc.inlier_score(qc)) <= 1e-9 * (1.0 + std::abs(m.inlier_score(q.row(r)))));
        }
        CHECK_THROWS_AS((void)m.inlier_score(std::vector<double>{1.0}), DomainError);
    }

    TEST_CASE("fit row order does not change any variant")
    {
        Rng rng(8);
        const Tensor x = random_tensor(rng, {120, 3}, 0.0, 2.0);
        const Tensor shuffled = x.gather_rows(rng.permutation(x.rows()));
        const Tensor q = random_tensor(rng, {20, 3}, -0.5, 2.5);
        for (const AuxVariant v : {AuxVariant::gmm, AuxVariant::flow, AuxVariant::knn}) {
            CAPTURE(variant_name(v));
            AuxOptions opt;
            opt.variant = v;
            opt.seed = 3;
            opt.gmm_k_min = 2;
            opt.gmm_k_max = 3;
            opt.gmm_folds = 3;
            opt.flow = quick_flow();
            const AuxModel a = AuxModel::fit(x, opt);
            const AuxModel b = AuxModel::fit(shuffled, opt);
            CHECK(a.inlier_scores(q) == b.inlier_scores(q));
        }
    }

    TEST_CASE("knn scores")
    {
        AuxOptions opt;
        opt.variant = AuxVariant::knn;
        opt.knn_k = 1;
        const AuxModel m = AuxModel::fit(Tensor::from_rows({{0.0}, {1.0}, {10.0}}), opt);
        CHECK(m.inlier_score(std::vector<double>{0.4}) == doctest::Approx(-0.4).epsilon(1e-15));
        CHECK(m.inlier_score(std::vector<double>{10.0}) == 0.0);
        const auto self = m.fit_set_scores();
        CHECK(self == std::vector<double>{-1.0, -1.0, -9.0});

        opt.knn_k = 3;
        CHECK_THROWS_AS((void)AuxModel::fit(Tensor::from_rows({{0.0}, {1.0}, {10.0}}), opt), DomainError);
        opt.knn_k = 2;
        opt.knn_aggregate = KnnAggregate::mean;
        const AuxModel mean = AuxModel::fit(Tensor::from_rows({{0.0}, {1.0}, {10.0}}), opt);
        CHECK(mean.inlier_score(std::vector<double>{0.4}) == doctest::Approx(-0.5));
    }

    TEST_CASE("kd-tree equals brute force exactly")
    {
        Rng rng(9);
        for (const std::size_t dim : {1, 2, 3, 10}) {
            Tensor pts = random_tensor(rng, {500, dim});
            // Duplicates and a coarse grid create equidistant ties.
            for (std::size_t r = 0; r < 100; ++r) {
                for (std::size_t j = 0; j < dim; ++j) {
                    pts(r, j) = std::round(pts(r, j) * 2.0) / 2.0;
                }
            }
            const KdTree tree(pts);
            for (int t = 0; t < 100; ++t) {
                Tensor q = random_tensor(rng, {1, dim});
                if (t % 4 == 0) {
                    for (std::size_t j = 0; j < dim; ++j) {
                        q[j] = std::round(q[j] * 2.0) / 2.0;
                    }
                }
                const std::size_t k = 1 + rng.below(12);
                REQUIRE(tree.query(q.row(0), k) == knn_brute_force(pts, q.row(0), k));
                const std::size_t ex = rng.below(500);
                REQUIRE(tree.query(pts.row(ex), k, ex) == knn_brute_force(pts, pts.row(ex), k, ex));
            }
        }
        const KdTree tree(Tensor::from_rows({{0.0, 0.0}, {1.0, 1.0}}));
        CHECK_THROWS_AS((void)tree.query(std::vector<double>{0.0}, 1), DomainError);
        CHECK_THROWS_AS((void)tree.query(std::vector<double>{0.0, 0.0}, 3), DomainError);
        CHECK_THROWS_AS((void)tree.query(std::vector<double>{0.0, 0.0}, 2, 0), DomainError);
    }

    TEST_CASE("identity flow is the standard normal")
    {
        Rng rng(10);
        const MafFlow flow(2, quick_flow(), rng);
        const Tensor x = random_tensor(rng, {10, 2}, -3.0, 3.0);
        const auto lp = flow.log_density(x);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * (x(r, 0) * x(r, 0) + x(r, 1) * x(r, 1));
            CHECK(lp[r] == doctest::Approx(expected).epsilon(1e-14));
        }
        CHECK(flow.log_density(Tensor::from_rows({{0.0, 0.0}}))[0] == doctest::Approx(-1.8379).epsilon(1e-4));
    }

    TEST_CASE("flow inverse undoes forward")
    {
        Rng rng(11);
        FlowOptions opt = quick_flow();
        opt.hidden = {32, 32};
        MafFlow flow(4, opt, rng);
        for (Tensor* p : flow.parameters()) {
            for (auto& v : p->data()) {
                v += 0.2 * (2.0 * rng.uniform() - 1.0);
            }
        }
        const Tensor x = random_tensor(rng, {1000, 4}, -3.0, 3.0);
        const Tensor back = flow.inverse(flow.forward(x));
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            worst = std::max(worst, std::abs(back[i] - x[i]));
        }
        CHECK(worst <= 1e-8);
    }

    TEST_CASE("flow nll gradient matches finite differences")
    {
        Rng rng(12);
        MafFlow flow(3, quick_flow(), rng);
        for (Tensor* p : flow.parameters()) {
            for (auto& v : p->data()) {
                v += 0.2 * (2.0 * rng.uniform() - 1.0);
            }
        }
        const Tensor x = random_tensor(rng, {8, 3});
        auto loss = [&](const MafFlow& f) {
            ad::Tape tape;
            std::vector<ad::Var> vars;
            for (const Tensor* p : f.parameters()) {
                vars.push_back(tape.variable(*p));
            }
            return f.nll(tape, x, vars).value().item();
        };
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (const Tensor* p : std::as_const(flow).parameters()) {
            vars.push_back(tape.variable(*p));
        }
        const ad::Var nll = flow.nll(tape, x, vars);
        tape.backward(nll);
        double mean_lp = 0.0;
        for (const double v : flow.log_density(x)) {
            mean_lp += v;
        }
        CHECK(nll.value().item() == doctest::Approx(-mean_lp / 8.0).epsilon(1e-12));
        auto params = flow.parameters();
        for (int t = 0; t < 50; ++t) {
            const std::size_t p = rng.below(params.size());
            const std::size_t i = rng.below(params[p]->size());
            const double saved = (*params[p])[i];
            (*params[p])[i] = saved + 1e-5;
            const double up = loss(flow);
            (*params[p])[i] = saved - 1e-5;
            const double down = loss(flow);
            (*params[p])[i] = saved;
            REQUIRE(msma::test::rel_close(tape.grad(vars[p])[i], (up - down) / 2e-5, 1e-4, 1e-8));
        }
    }

    TEST_CASE("flow learns a shifted gaussian")
    {
        Rng rng(13);
        const GaussianMixture law = make_gaussian({5.0}, 1.0);
        const Tensor train = sample_mixture_values(law, 2000, rng);
        const Tensor test = sample_mixture_values(law, 2000, rng);
        FlowOptions opt;
        opt.hidden = {16, 16};
        opt.epochs = 200;
        opt.batch_size = 128;
        opt.adam.learning_rate = 1e-2;
        const FlowFit fit = fit_maf(train, opt);
        double mean = 0.0;
        for (const double v : fit.flow.log_density(test)) {
            mean += v;
        }
        mean /= 2000.0;
        double sq = 0.0;
        for (const double v : test.data()) {
            sq += (v - 5.0) * (v - 5.0);
        }
        const double analytic = -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * sq / 2000.0;
        CHECK(std::abs(mean - analytic) <= 0.1);
        CHECK(fit.epoch_loss.size() == 200);

        FlowOptions again = opt;
        again.epochs = 3;
        CHECK(fit_maf(train, again).flow == fit_maf(train, again).flow);
        again.batch_size = 5000;
        CHECK_THROWS_AS((void)fit_maf(train, again), DomainError);
    }

    TEST_CASE("aux model files round trip for every variant")
    {
        const auto dir = msma::test::scratch_dir("aux");
        Rng rng(14);
        const Tensor x = two_blobs(rng, 60);
        const Tensor q = random_tensor(rng, {10, 2}, -1.0, 6.0);
        for (const AuxVariant v : {AuxVariant::gmm, AuxVariant::flow, AuxVariant::knn}) {
            AuxOptions opt;
            opt.variant = v;
            opt.gmm_k_max = 3;
            opt.gmm_folds = 3;
            opt.flow = quick_flow();
            const AuxModel m = AuxModel::fit(x, opt);
            const auto path = dir / (std::string(variant_name(v)) + ".json");
            save_aux_model(path, m, "abc");
            const AuxModel back = load_aux_model(path);
            CHECK(back.variant() == v);
            CHECK(back.inlier_scores(q) == m.inlier_scores(q));
            if (v == AuxVariant::gmm) {
                write_gmm_trace(dir / "trace.csv", *m.selection(), "abc");
                const CsvMatrix trace = read_csv_matrix(dir / "trace.csv");
                CHECK(trace.values.rows() == 2);
                CHECK(trace.header.front() == "k");
                CHECK(trace.comments.front() == "config_hash=abc");
            }
        }
        write_text_file(dir / "junk.json", "{\"format\": \"other\"}");
        CHECK_THROWS_AS((void)load_aux_model(dir / "junk.json"), IoError);
        CHECK(parse_variant("flow") == AuxVariant::flow);
        CHECK_THROWS_AS((void)parse_variant("svm"), ConfigError);
    }
}
