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

#include "msma/flow.hpp"

#include "msma/errors.hpp"
#include "msma/kernels.hpp"

#include <cmath>
#include <numbers>

namespace msma {

namespace {

const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

auto affine(const Tensor& h, const Tensor& w, const Tensor& mask, const Tensor& b) -> Tensor
{
    Tensor masked = w;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        masked[i] *= mask[i];
    }
    Tensor out = Tensor::matrix(h.rows(), w.cols());
    kernels::gemm_nn(h.data(), masked.data(), out.data(), {h.rows(), w.rows(), w.cols()});
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += b[c];
        }
    }
    return out;
}

} // namespace

MafFlow::MafFlow(std::size_t dim, const FlowOptions& options, Rng& rng) : dim_(dim), hidden_(options.hidden)
{
    if (dim_ == 0 || options.transforms == 0 || hidden_.empty()) {
        throw DomainError("MafFlow needs dim >= 1, at least one transform and one hidden layer");
    }
    for (std::size_t t = 0; t < options.transforms; ++t) {
        Made m;
        m.degree.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            m.degree[i] = t % 2 == 0 ? i + 1 : dim_ - i;
        }
        std::size_t fan_in = dim_;
        for (const auto width : hidden_) {
            if (width == 0) {
                throw DomainError("MafFlow hidden widths must be positive");
            }
            m.weights.push_back(gaussian_sample(rng, {fan_in, width}, 0.0, 1.0 / std::sqrt(double(fan_in))));
            m.biases.emplace_back(Shape{1, width}, 0.0);
            fan_in = width;
        }
        m.weights.emplace_back(Shape{fan_in, 2 * dim_}, 0.0);
        m.biases.emplace_back(Shape{1, 2 * dim_}, 0.0);
        build_masks(m);
        layers_.push_back(std::move(m));
    }
}

void MafFlow::build_masks(Made& m) const
{
    // Hidden unit k gets degree (k mod (D-1)) + 1, so every output i sees
    // exactly the inputs with smaller degree.
    const std::size_t span = dim_ > 1 ? dim_ - 1 : 1;
    auto hidden_degree = [&](std::size_t k) { return k % span + 1; };
    m.masks.clear();
    std::vector<std::size_t> prev = m.degree;
    for (const auto width : hidden_) {
        Tensor mask = Tensor::matrix(prev.size(), width);
        for (std::size_t i = 0; i < prev.size(); ++i) {
            for (std::size_t k = 0; k < width; ++k) {
                mask(i, k) = hidden_degree(k) >= prev[i] ? 1.0 : 0.0;
            }
        }
        m.masks.push_back(std::move(mask));
        prev.resize(width);
        for (std::size_t k = 0; k < width; ++k) {
            prev[k] = hidden_degree(k);
        }
    }
    Tensor out = Tensor::matrix(prev.size(), 2 * dim_);
    for (std::size_t k = 0; k < prev.size(); ++k) {
        for (std::size_t o = 0; o < 2 * dim_; ++o) {
            out(k, o) = m.degree[o % dim_] > prev[k] ? 1.0 : 0.0;
        }
    }
    m.masks.push_back(std::move(out));
}

void MafFlow::conditioner(const Made& m, const Tensor& x, Tensor& mu, Tensor& alpha) const
{
    Tensor h = x;
    const std::size_t last = m.weights.size() - 1;
    for (std::size_t l = 0; l < last; ++l) {
        h = affine(h, m.weights[l], m.masks[l], m.biases[l]);
        for (auto& v : h.data()) {
            v = v > 0.0 ? v : std::expm1(v);
        }
    }
    const Tensor out = affine(h, m.weights[last], m.masks[last], m.biases[last]);
    mu = Tensor::matrix(x.rows(), dim_);
    alpha = Tensor::matrix(x.rows(), dim_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < dim_; ++j) {
            mu(r, j) = out(r, j);
            alpha(r, j) = out(r, dim_ + j);
        }
    }
}

auto MafFlow::forward(const Tensor& x) const -> Tensor
{
    if (x.cols() != dim_) {
        throw DomainError("MafFlow: input has " + std::to_string(x.cols()) + " columns, flow has "
                          + std::to_string(dim_));
    }
    Tensor z = x;
    Tensor mu;
    Tensor alpha;
    for (const Made& m : layers_) {
        conditioner(m, z, mu, alpha);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = (z[i] - mu[i]) * std::exp(-alpha[i]);
        }
    }
    return z;
}

auto MafFlow::inverse(const Tensor& z) const -> Tensor
{
    if (z.cols() != dim_) {
        throw DomainError("MafFlow: latent has " + std::to_string(z.cols()) + " columns, flow has "
                          + std::to_string(dim_));
    }
    Tensor u = z;
    Tensor mu;
    Tensor alpha;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        const Made& m = *it;
        Tensor x(u.shape(), 0.0);
        // Coordinates of degree p depend only on degrees < p.
        for (std::size_t p = 1; p <= dim_; ++p) {
            conditioner(m, x, mu, alpha);
            for (std::size_t j = 0; j < dim_; ++j) {
                if (m.degree[j] != p) {
                    continue;
                }
                for (std::size_t r = 0; r < x.rows(); ++r) {
                    x(r, j) = u(r, j) * std::exp(alpha(r, j)) + mu(r, j);
                }
            }
        }
        u = std::move(x);
    }
    return u;
}

auto MafFlow::log_density(const Tensor& x) const -> std::vector<double>
{
    if (x.cols() != dim_) {
        throw DomainError("MafFlow: input has " + std::to_string(x.cols()) + " columns, flow has "
                          + std::to_string(dim_));
    }
    std::vector<double> out(x.rows(), 0.0);
    Tensor z = x;
    Tensor mu;
    Tensor alpha;
    for (const Made& m : layers_) {
        conditioner(m, z, mu, alpha);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            for (std::size_t j = 0; j < dim_; ++j) {
                z(r, j) = (z(r, j) - mu(r, j)) * std::exp(-alpha(r, j));
                out[r] -= alpha(r, j);
            }
        }
    }
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t j = 0; j < dim_; ++j) {
            out[r] += -0.5 * z(r, j) * z(r, j) - half_log_2pi;
        }
    }
    return out;
}

auto MafFlow::nll(ad::Tape& tape, const Tensor& x, std::span<const ad::Var> params) const -> ad::Var
{
    std::size_t p = 0;
    ad::Var z = tape.constant(x);
    ad::Var log_det;
    bool have_log_det = false;
    for (const Made& m : layers_) {
        ad::Var h = z;
        const std::size_t last = m.weights.size() - 1;
        for (std::size_t l = 0; l <= last; ++l) {
            const ad::Var w = ad::mul(params[p], tape.constant(m.masks[l]));
            h = ad::add(ad::matmul(h, w), params[p + 1]);
            p += 2;
            if (l < last) {
                h = ad::elu(h);
            }
        }
        const ad::Var mu = ad::slice_cols(h, 0, dim_);
        const ad::Var alpha = ad::slice_cols(h, dim_, 2 * dim_);
        z = ad::mul(ad::sub(z, mu), ad::exp(ad::scale(alpha, -1.0)));
        const ad::Var a = ad::sum(alpha);
        log_det = have_log_det ? ad::add(log_det, a) : a;
        have_log_det = true;
    }
    const ad::Var log_base = ad::sum(ad::gaussian_logpdf(z));
    return ad::scale(ad::sub(log_base, log_det), -1.0 / static_cast<double>(x.rows()));
}

auto MafFlow::parameters() -> std::vector<Tensor*>
{
    std::vector<Tensor*> out;
    for (Made& m : layers_) {
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            out.push_back(&m.weights[l]);
            out.push_back(&m.biases[l]);
        }
    }
    return out;
}

auto MafFlow::parameters() const -> std::vector<const Tensor*>
{
    std::vector<const Tensor*> out;
    for (const Made& m : layers_) {
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            out.push_back(&m.weights[l]);
            out.push_back(&m.biases[l]);
        }
    }
    return out;
}

auto fit_maf(const Tensor& x, const FlowOptions& options) -> FlowFit
{
    if (options.batch_size == 0 || x.rows() < options.batch_size) {
        throw DomainError("flow training needs 1 <= batch_size <= N (N = " + std::to_string(x.rows()) + ")");
    }
    if (!x.all_finite()) {
        throw DomainError("flow training data contains non-finite values");
    }
    Rng root(options.seed);
    Rng init_rng = root.split(1);
    Rng batch_rng = root.split(2);

    FlowFit fit{MafFlow(x.cols(), options, init_rng), {}};
    const auto params = fit.flow.parameters();
    Adam adam(options.adam, params);
    const std::size_t n = x.rows();

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const auto order = batch_rng.permutation(n);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += options.batch_size) {
            const std::size_t end = std::min(n, begin + options.batch_size);
            const std::span<const std::size_t> idx(order.data() + begin, end - begin);
            ad::Tape tape;
            std::vector<ad::Var> leaves;
            for (const Tensor* p : params) {
                leaves.push_back(tape.variable(*p));
            }
            const ad::Var loss = fit.flow.nll(tape, x.gather_rows(idx), leaves);
            const double value = loss.value().item();
            if (!std::isfinite(value)) {
                throw NumericalError("flow training diverged: non-finite loss in epoch " + std::to_string(epoch));
            }
            tape.backward(loss);
            std::vector<Tensor> grads;
            grads.reserve(leaves.size());
            for (const auto& v : leaves) {
                grads.push_back(tape.grad(v));
            }
            adam.step(params, grads);
            total += value;
            ++batches;
        }
        fit.epoch_loss.push_back(total / double(batches));
    }
    return fit;
}

} // namespace msma
