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

#include "msma/gmm.hpp"

#include "msma/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace msma {

namespace {

const double log_2pi = std::log(2.0 * std::numbers::pi);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

auto log_sum_exp(std::span<const double> v) -> double
{
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top)) {
        return top;
    }
    double s = 0.0;
    for (const double t : v) {
        s += std::exp(t - top);
    }
    return top + std::log(s);
}

struct Estimate
{
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> covs;
    bool floored = false;
};

// Weighted mean and covariance of the rows of x under column c of resp.
// Components with no mass keep `fallback`'s parameters.
auto m_step(const Tensor& x, const std::vector<double>& resp, std::size_t k, const Estimate* fallback,
            double floor) -> Estimate
{
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Estimate est;
    est.weights.assign(k, 0.0);
    est.means.assign(k, std::vector<double>(d, 0.0));
    est.covs.assign(k, std::vector<double>(d * d, 0.0));
    std::vector<char> floored(k, 0);

#pragma omp parallel for schedule(static)
    for (std::int64_t ci = 0; ci < std::int64_t(k); ++ci) {
        const auto c = std::size_t(ci);
        double nk = 0.0;
        auto& mu = est.means[c];
        for (std::size_t i = 0; i < n; ++i) {
            const double r = resp[i * k + c];
            nk += r;
            for (std::size_t j = 0; j < d; ++j) {
                mu[j] += r * x(i, j);
            }
        }
        auto& cov = est.covs[c];
        if (nk < 1e-10 * double(n) && fallback != nullptr) {
            mu = fallback->means[c];
            cov = fallback->covs[c];
        } else {
            for (auto& m : mu) {
                m /= nk;
            }
            std::vector<double> diff(d);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp[i * k + c];
                if (r == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    diff[j] = x(i, j) - mu[j];
                }
                for (std::size_t a = 0; a < d; ++a) {
                    const double ra = r * diff[a];
                    for (std::size_t b = 0; b <= a; ++b) {
                        cov[a * d + b] += ra * diff[b];
                    }
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b <= a; ++b) {
                    cov[a * d + b] /= nk;
                    cov[b * d + a] = cov[a * d + b];
                }
            }
        }
        est.weights[c] = nk / double(n);

        for (std::size_t j = 0; j < d; ++j) {
            if (!(cov[j * d + j] >= floor)) {
                cov[j * d + j] = floor;
                floored[c] = 1;
            }
        }
        // Still singular: add ridge until the factorisation succeeds.
        double ridge = floor;
        while (true) {
            const Eigen::Map<const RowMatrix> m(cov.data(), Eigen::Index(d), Eigen::Index(d));
            if (Eigen::LLT<RowMatrix>(m).info() == Eigen::Success) {
                break;
            }
            for (std::size_t j = 0; j < d; ++j) {
                cov[j * d + j] += ridge;
            }
            ridge *= 10.0;
            floored[c] = 1;
        }
    }

    double total = 0.0;
    for (const double w : est.weights) {
        total += w;
    }
    for (auto& w : est.weights) {
        w /= total;
    }
    est.floored = std::any_of(floored.begin(), floored.end(), [](char f) { return f != 0; });
    return est;
}

// Responsibilities into resp (N x k); returns the mean log-likelihood.
auto e_step(const Gmm& model, const Tensor& x, std::vector<double>& resp) -> double
{
    const std::size_t n = x.rows();
    const std::size_t k = model.components();
    resp.resize(n * k);
    std::vector<double> ll(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
        const auto i = std::size_t(ii);
        std::span<double> r(resp.data() + i * k, k);
        model.component_log_terms(x.row(i), r);
        const double lse = log_sum_exp(r);
        ll[i] = lse;
        for (auto& v : r) {
            v = std::exp(v - lse);
        }
    }
    double sum = 0.0;
    for (const double v : ll) {
        sum += v;
    }
    return sum / double(n);
}

auto to_model(Estimate est) -> Gmm
{
    return Gmm(std::move(est.weights), std::move(est.means), std::move(est.covs));
}

auto squared_distance(std::span<const double> a, std::span<const double> b) -> double
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

// k-means++ seeds, then hard assignment to the nearest seed.
auto seed_responsibilities(const Tensor& x, std::size_t k, Rng& rng) -> std::vector<double>
{
    const std::size_t n = x.rows();
    std::vector<std::size_t> centers{static_cast<std::size_t>(rng.below(n))};
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(x.row(i), x.row(centers[0]));
    }
    while (centers.size() < k) {
        double total = 0.0;
        for (const double v : d2) {
            total += v;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
        centers.push_back(pick);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(pick)));
        }
    }
    std::vector<double> resp(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(x.row(i), x.row(centers[0]));
        for (std::size_t c = 1; c < k; ++c) {
            const double dc = squared_distance(x.row(i), x.row(centers[c]));
            if (dc < best_d) {
                best_d = dc;
                best = c;
            }
        }
        resp[i * k + best] = 1.0;
    }
    return resp;
}

// Pooled data moments, used for components that start out empty.
auto global_estimate(const Tensor& x, std::size_t k, double floor) -> Estimate
{
    const std::vector<double> ones(x.rows(), 1.0);
    Estimate one = m_step(x, ones, 1, nullptr, floor);
    Estimate est;
    est.weights.assign(k, 1.0 / double(k));
    est.means.assign(k, one.means[0]);
    est.covs.assign(k, one.covs[0]);
    return est;
}

} // namespace

Gmm::Gmm(std::vector<double> weights, std::vector<std::vector<double>> means,
         std::vector<std::vector<double>> covariances)
  : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances))
{
    if (weights_.empty() || means_.size() != weights_.size() || covs_.size() != weights_.size()) {
        throw DomainError("Gmm: weights, means and covariances must be non-empty and parallel");
    }
    dim_ = means_.front().size();
    if (dim_ == 0) {
        throw DomainError("Gmm: dimension must be positive");
    }
    double total = 0.0;
    for (const double w : weights_) {
        if (!(w >= 0.0)) {
            throw DomainError("Gmm: weights must be non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("Gmm: weights must sum to 1");
    }
    for (std::size_t c = 0; c < weights_.size(); ++c) {
        if (means_[c].size() != dim_ || covs_[c].size() != dim_ * dim_) {
            throw DomainError("Gmm: component " + std::to_string(c) + " has the wrong dimension");
        }
        const Eigen::Map<const RowMatrix> m(covs_[c].data(), Eigen::Index(dim_), Eigen::Index(dim_));
        const Eigen::LLT<RowMatrix> llt(m);
        if (llt.info() != Eigen::Success) {
            throw DomainError("Gmm: covariance of component " + std::to_string(c) + " is not positive definite");
        }
        const RowMatrix l = llt.matrixL();
        chol_.emplace_back(l.data(), l.data() + l.size());
        double ld = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            ld += 2.0 * std::log(l(Eigen::Index(j), Eigen::Index(j)));
        }
        log_det_.push_back(ld);
        log_weights_.push_back(weights_[c] > 0.0 ? std::log(weights_[c])
                                                 : -std::numeric_limits<double>::infinity());
    }
}

void Gmm::component_log_terms(std::span<const double> x, std::span<double> out) const
{
    if (x.size() != dim_) {
        throw DomainError("Gmm: query has dimension " + std::to_string(x.size()) + ", model has "
                          + std::to_string(dim_));
    }
    std::vector<double> y(dim_);
    for (std::size_t c = 0; c < components(); ++c) {
        // Forward substitution L y = x - mu.
        const auto& l = chol_[c];
        double q = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double s = x[i] - means_[c][i];
            for (std::size_t j = 0; j < i; ++j) {
                s -= l[i * dim_ + j] * y[j];
            }
            y[i] = s / l[i * dim_ + i];
            q += y[i] * y[i];
        }
        out[c] = log_weights_[c] - 0.5 * (double(dim_) * log_2pi + log_det_[c] + q);
    }
}

auto Gmm::log_density(std::span<const double> x) const -> double
{
    std::vector<double> terms(components());
    component_log_terms(x, terms);
    return log_sum_exp(terms);
}

auto mean_log_likelihood(const Gmm& model, const Tensor& x) -> double
{
    std::vector<double> resp;
    return e_step(model, x, resp);
}

auto fit_em_once(const Tensor& x, std::size_t k, Rng& rng, const EmOptions& opt) -> EmResult
{
    if (k == 0 || x.rows() < k) {
        throw DomainError("EM needs 1 <= k <= N (k = " + std::to_string(k) + ", N = " + std::to_string(x.rows())
                          + ")");
    }
    if (!x.all_finite()) {
        throw DomainError("EM input contains non-finite values");
    }
    const Estimate global = global_estimate(x, k, opt.variance_floor);
    std::vector<double> resp = seed_responsibilities(x, k, rng);
    Estimate est = m_step(x, resp, k, &global, opt.variance_floor);

    EmResult result;
    result.floored = est.floored;
    result.model = to_model(est);
    for (std::size_t it = 0;; ++it) {
        const double ll = e_step(result.model, x, resp);
        if (!std::isfinite(ll)) {
            throw NumericalError("EM log-likelihood became non-finite at iteration " + std::to_string(it));
        }
        result.log_likelihood.push_back(ll);
        const std::size_t m = result.log_likelihood.size();
        if ((m >= 2 && result.log_likelihood[m - 1] - result.log_likelihood[m - 2] < opt.tolerance)
            || it == opt.max_iterations) {
            break;
        }
        est = m_step(x, resp, k, &est, opt.variance_floor);
        result.floored = result.floored || est.floored;
        result.model = to_model(est);
        result.iterations = it + 1;
    }
    return result;
}

auto fit_em(const Tensor& x, std::size_t k, Rng& rng, const EmOptions& opt) -> EmResult
{
    const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);
    EmResult best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng stream = rng.split(r);
        EmResult run = fit_em_once(x, k, stream, opt);
        if (r == 0 || run.log_likelihood.back() > best.log_likelihood.back()) {
            best = std::move(run);
        }
    }
    return best;
}

auto select_components(const Tensor& x, std::size_t k_min, std::size_t k_max, std::size_t folds, Rng& rng,
                       const EmOptions& opt) -> GmmSelection
{
    if (k_min == 0 || k_min > k_max || folds < 2) {
        throw DomainError("GMM selection needs 1 <= k_min <= k_max and at least 2 folds");
    }
    const std::size_t n = x.rows();
    if (n < folds * k_max) {
        throw DomainError("GMM selection needs N >= folds * k_max (" + std::to_string(n) + " < "
                          + std::to_string(folds * k_max) + ")");
    }
    const auto order = rng.split(0).permutation(n);
    std::vector<std::vector<std::size_t>> held(folds);
    std::vector<std::vector<std::size_t>> kept(folds);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < folds; ++f) {
            (i % folds == f ? held[f] : kept[f]).push_back(order[i]);
        }
    }

    GmmSelection sel;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        GmmSelectionRow row;
        row.k = k;
        double sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            Rng stream = rng.split(1 + k * folds + f);
            const EmResult fit = fit_em(x.gather_rows(kept[f]), k, stream, opt);
            const double ll = mean_log_likelihood(fit.model, x.gather_rows(held[f]));
            row.fold_log_likelihood.push_back(ll);
            sum += ll;
        }
        row.mean_heldout_log_likelihood = sum / double(folds);
        if (row.mean_heldout_log_likelihood > best) {
            best = row.mean_heldout_log_likelihood;
            sel.selected_k = k;
        }
        sel.trace.push_back(std::move(row));
    }
    return sel;
}

} // namespace msma
