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

#include "../oracles/metric_oracle.hpp"

#include "msma/data_io.hpp"
#include "msma/errors.hpp"

using namespace msma;

TEST_SUITE("ood-metrics")
{
    TEST_CASE("fpr at tpr examples")
    {
        const LabeledScores ls{{4, 3, 2, 1}, {3.5, 2.5, 1.5, 0.5}};
        const ThresholdResult r = fpr_at_tpr(ls, 0.95);
        CHECK(r.threshold == 1.0);
        CHECK(r.value == 0.75);
        CHECK(fpr_at_tpr({{2, 3}, {0, 1}}, 0.95).value == 0.0);
        CHECK(fpr_at_tpr(ls, 0.80).value == oracle::fpr_at_tpr(ls, 0.80).value);
        CHECK_THROWS_AS((void)fpr_at_tpr(ls, 0.0), DomainError);
        CHECK_THROWS_AS((void)fpr_at_tpr(ls, 1.5), DomainError);
    }

    TEST_CASE("detection error examples")
    {
        const ThresholdResult sep = detection_error({{2, 3}, {0, 1}});
        CHECK(sep.value == 0.0);
        CHECK(sep.threshold > 1.0);
        CHECK(sep.threshold <= 2.0);
        CHECK(detection_error({{1, 2, 2, 5}, {5, 2, 1, 2}}).value == 0.5);
        const ThresholdResult r = detection_error({{3, 1}, {2, 0}});
        CHECK(r.value == 0.25);
        // t = 3 (TPR 0.5, FPR 0) ties t = 1 (TPR 1, FPR 0.5); larger wins.
        CHECK(r.threshold == 3.0);
    }

    TEST_CASE("auroc examples")
    {
        CHECK(auroc({{2, 3}, {0, 1}}) == 1.0);
        CHECK(auroc({{0, 1}, {2, 3}}) == 0.0);
        CHECK(auroc({{1, 2}, {1, 2}}) == 0.5);
    }

    TEST_CASE("aupr examples")
    {
        CHECK(aupr({{2, 3}, {0, 1}}, Positive::in) == 1.0);
        CHECK(aupr({{2, 3}, {0, 1}}, Positive::out) == 1.0);
        CHECK(aupr({{1}, {1, 1, 1}}, Positive::in) == 0.25);
        CHECK(aupr({{1}, {1, 1, 1}}, Positive::out) == 0.75);
    }

    TEST_CASE("empty or non-finite input is rejected")
    {
        CHECK_THROWS_AS((void)auroc({{}, {1}}), DomainError);
        CHECK_THROWS_AS((void)auroc({{1}, {}}), DomainError);
        CHECK_THROWS_AS((void)evaluate({{1, std::nan("")}, {0}}), DomainError);
    }

    TEST_CASE("all metrics equal exhaustive enumeration")
    {
        Rng rng(2025);
        for (int t = 0; t < 500; ++t) {
            const LabeledScores ls = oracle::random_instance(rng);
            CAPTURE(t);
            for (const double level : {0.95, 0.8, 0.5, 1.0}) {
                const auto a = fpr_at_tpr(ls, level);
                const auto b = oracle::fpr_at_tpr(ls, level);
                REQUIRE(a.value == b.value);
                REQUIRE(a.threshold == b.threshold);
            }
            const auto d = detection_error(ls);
            const auto e = oracle::detection_error(ls);
            REQUIRE(d.value == e.value);
            REQUIRE(d.threshold == e.threshold);
            REQUIRE(auroc(ls) == oracle::auroc(ls));
            REQUIRE(aupr(ls, Positive::in) == oracle::aupr(ls, Positive::in));
            REQUIRE(aupr(ls, Positive::out) == oracle::aupr(ls, Positive::out));
        }
    }

    TEST_CASE("report invariants")
    {
        Rng rng(7);
        for (int t = 0; t < 200; ++t) {
            const LabeledScores ls = oracle::random_instance(rng);
            const OodReport r = evaluate(ls);
            for (const double v : {r.fpr, r.fpr80, r.detection_error, r.auroc, r.aupr_in, r.aupr_out}) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
            REQUIRE(r.detection_error <= 0.5 + 1e-12);
            const Confusion c = r.at_detection_threshold;
            REQUIRE(c.tp + c.fn == ls.inlier.size());
            REQUIRE(c.fp + c.tn == ls.outlier.size());
            // FPR at a lower TPR level is never larger.
            REQUIRE(fpr_at_tpr(ls, 0.5).value <= fpr_at_tpr(ls, 0.95).value);
        }
    }

    TEST_CASE("rank invariance and side swaps")
    {
        Rng rng(8);
        for (int t = 0; t < 200; ++t) {
            const LabeledScores ls = oracle::random_instance(rng);
            LabeledScores mapped = ls;
            // Strictly increasing map.
            for (auto* side : {&mapped.inlier, &mapped.outlier}) {
                for (auto& v : *side) {
                    v = std::exp(3.0 * v) + 7.0;
                }
            }
            const OodReport a = evaluate(ls);
            const OodReport b = evaluate(mapped);
            REQUIRE(a.fpr == b.fpr);
            REQUIRE(a.detection_error == b.detection_error);
            REQUIRE(a.auroc == b.auroc);
            REQUIRE(a.aupr_in == b.aupr_in);
            REQUIRE(a.aupr_out == b.aupr_out);

            // Negating every score and swapping the roles of the sides.
            LabeledScores flipped;
            for (const double v : ls.outlier) {
                flipped.inlier.push_back(-v);
            }
            for (const double v : ls.inlier) {
                flipped.outlier.push_back(-v);
            }
            const OodReport f = evaluate(flipped);
            REQUIRE(f.auroc == a.auroc);
            REQUIRE(f.detection_error == a.detection_error);
            REQUIRE(f.aupr_in == a.aupr_out);
            REQUIRE(f.aupr_out == a.aupr_in);

            // Swapping sides without negation mirrors AUROC when tie-free.
            const LabeledScores swapped{ls.outlier, ls.inlier};
            const double sum = auroc(ls) + auroc(swapped);
            REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-15));
        }
    }

    TEST_CASE("table rows follow the header")
    {
        OodReport r;
        r.fpr = 0.1234;
        r.detection_error = 0.05;
        r.auroc = 0.99;
        r.aupr_in = 0.98;
        r.aupr_out = 0.97;
        r.fpr80 = 0.02;
        CHECK(table_header(TableLayout::standard) == "Method,FPR@95,DetErr,AUROC,AUPR-In,AUPR-Out");
        CHECK(table_row("m", r, TableLayout::standard) == "m,12.34,5.00,99.00,98.00,97.00");
        CHECK(table_header(TableLayout::likelihood) == "Method,FPR@80,AUROC,AUPR-In");
        CHECK(table_row("m", r, TableLayout::likelihood) == "m,2.00,99.00,98.00");

        const auto dir = msma::test::scratch_dir("results");
        append_results_row(dir / "r.csv", "a", r, TableLayout::standard);
        append_results_row(dir / "r.csv", "b", r, TableLayout::standard);
        CHECK(read_text_file(dir / "r.csv")
              == "Method,FPR@95,DetErr,AUROC,AUPR-In,AUPR-Out\na,12.34,5.00,99.00,98.00,97.00\n"
                 "b,12.34,5.00,99.00,98.00,97.00\n");
        const std::string text = report_text(r, "feed");
        CHECK(text.find("config_hash = feed") != std::string::npos);
        CHECK(text.find("auroc = 0.99") != std::string::npos);
    }
}
