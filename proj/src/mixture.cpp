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

#include "msma/mixture.hpp"

#include "msma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace msma {

namespace {

const double log_2pi = std::log(2.0 * std::numbers::pi);

// Per-component log(w_k N(x; mu_k, v_k)).
void component_log_terms(const GaussianMixture& gm, std::span<const double> x, std::vector<double>& out)
{
    out.resize(gm.components());
    for (std::size_t k = 0; k < gm.components(); ++k) {
        double acc = gm.weights[k] > 0.0 ? std::log(gm.weights[k]) : -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double v = gm.variances[k][j];
            const double d = x[j] - gm.means[k][j];
            acc -= 0.5 * (log_2pi + std::log(v) + d * d / v);
        }
        out[k] = acc;
    }
}

void score_into(const GaussianMixture& gm, std::span<const double> x, std::span<double> out,
                std::vector<double>& scratch)
{
    component_log_terms(gm, x, scratch);
    const double top = *std::max_element(scratch.begin(), scratch.end());
    if (!std::isfinite(top)) {
        throw NumericalError("mixture score saturated: every component has zero density at the query");
    }
    double norm = 0.0;
    for (auto& t : scratch) {
        t = std::exp(t - top);
        norm += t;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < gm.components(); ++k) {
        const double r = scratch[k] / norm;
        if (r == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[j] += r * (gm.means[k][j] - x[j]) / gm.variances[k][j];
        }
    }
}

void check_query(const GaussianMixture& gm, std::size_t d)
{
    if (d != gm.dim()) {
        throw DomainError("mixture query has dimension " + std::to_string(d) + ", mixture has "
                          + std::to_string(gm.dim()));
    }
}

} // namespace

void GaussianMixture::validate() const
{
    if (weights.empty() || means.size() != weights.size() || variances.size() != weights.size()) {
        throw DomainError("mixture needs matching, non-empty weights/means/variances");
    }
    const std::size_t d = means.front().size();
    if (d == 0) {
        throw DomainError("mixture dimension must be positive");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] >= 0.0)) {
            throw DomainError("mixture weights must be non-negative");
        }
        total += weights[k];
        if (means[k].size() != d || variances[k].size() != d) {
            throw DomainError("mixture component dimensions disagree");
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (!(variances[k][j] > 0.0) || !std::isfinite(variances[k][j]) || !std::isfinite(means[k][j])) {
                throw DomainError("mixture variances must be positive and finite");
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError("mixture weights sum to " + std::to_string(total) + ", not 1");
    }
}

auto make_mixture(std::vector<double> weights, std::vector<std::vector<double>> means,
                  std::vector<std::vector<double>> variances) -> GaussianMixture
{
    GaussianMixture gm{std::move(weights), std::move(means), std::move(variances)};
    gm.validate();
    return gm;
}

auto make_gaussian(std::vector<double> mean, double variance) -> GaussianMixture
{
    std::vector<double> var(mean.size(), variance);
    return make_mixture({1.0}, {std::move(mean)}, {std::move(var)});
}

auto perturbed_mixture(const GaussianMixture& gm, double sigma) -> GaussianMixture
{
    if (!(sigma >= 0.0)) {
        throw DomainError("perturbation sigma must be >= 0");
    }
    GaussianMixture out = gm;
    const double s2 = sigma * sigma;
    for (auto& v : out.variances) {
        for (auto& e : v) {
            e += s2;
        }
    }
    return out;
}

auto affine_mixture(const GaussianMixture& gm, std::span<const double> offset, std::span<const double> scale)
    -> GaussianMixture
{
    check_query(gm, offset.size());
    check_query(gm, scale.size());
    GaussianMixture out = gm;
    for (std::size_t k = 0; k < gm.components(); ++k) {
        for (std::size_t j = 0; j < gm.dim(); ++j) {
            if (!(scale[j] > 0.0)) {
                throw DomainError("affine_mixture: scale must be positive");
            }
            out.means[k][j] = (gm.means[k][j] - offset[j]) * scale[j];
            out.variances[k][j] = gm.variances[k][j] * scale[j] * scale[j];
        }
    }
    return out;
}

auto log_density(const GaussianMixture& gm, std::span<const double> x) -> double
{
    check_query(gm, x.size());
    std::vector<double> terms;
    component_log_terms(gm, x, terms);
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top)) {
        return top;
    }
    double s = 0.0;
    for (const double t : terms) {
        s += std::exp(t - top);
    }
    return top + std::log(s);
}

auto mixture_score(const GaussianMixture& gm, std::span<const double> x) -> std::vector<double>
{
    check_query(gm, x.size());
    std::vector<double> out(x.size());
    std::vector<double> scratch;
    score_into(gm, x, out, scratch);
    return out;
}

auto mixture_score(const GaussianMixture& gm, const Tensor& x) -> Tensor
{
    check_query(gm, x.cols());
    Tensor out(x.shape());
    const auto rows = static_cast<std::int64_t>(x.rows());
    bool failed = false;
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::int64_t r = 0; r < rows; ++r) {
            try {
                score_into(gm, x.row(std::size_t(r)), out.row(std::size_t(r)), scratch);
            } catch (const NumericalError&) {
#pragma omp atomic write
                failed = true;
            }
        }
    }
    if (failed) {
        throw NumericalError("mixture score saturated for at least one query row");
    }
    return out;
}

auto sample_mixture_values(const GaussianMixture& gm, std::size_t n, Rng& rng) -> Tensor
{
    gm.validate();
    if (n == 0) {
        throw DomainError("cannot sample zero points");
    }
    const std::size_t d = gm.dim();
    Tensor out = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t k = 0;
        double acc = gm.weights[0];
        while (u >= acc && k + 1 < gm.components()) {
            ++k;
            acc += gm.weights[k];
        }
        // Skip trailing zero-weight components reached through rounding.
        while (gm.weights[k] == 0.0 && k > 0) {
            --k;
        }
        for (std::size_t j = 0; j < d; ++j) {
            out(i, j) = gm.means[k][j] + std::sqrt(gm.variances[k][j]) * rng.normal();
        }
    }
    return out;
}

auto mixture_to_json(const GaussianMixture& gm) -> std::string
{
    nlohmann::json j;
    j["weights"] = gm.weights;
    j["means"] = gm.means;
    j["variances"] = gm.variances;
    return j.dump(2);
}

auto mixture_from_json(const std::string& text) -> GaussianMixture
{
    try {
        const auto j = nlohmann::json::parse(text);
        GaussianMixture gm;
        gm.weights = j.at("weights").get<std::vector<double>>();
        gm.means = j.at("means").get<std::vector<std::vector<double>>>();
        if (j.contains("variances")) {
            gm.variances = j.at("variances").get<std::vector<std::vector<double>>>();
        } else {
            // Allow "stddevs" for hand-written scenario files.
            gm.variances = j.at("stddevs").get<std::vector<std::vector<double>>>();
            for (auto& v : gm.variances) {
                for (auto& e : v) {
                    e *= e;
                }
            }
        }
        gm.validate();
        return gm;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad mixture description: ") + e.what());
    }
}

} // namespace msma
