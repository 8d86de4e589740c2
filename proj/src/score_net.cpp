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

#include "msma/score_net.hpp"

#include "msma/errors.hpp"
#include "msma/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace msma {

ScoreNet::ScoreNet(std::size_t dim, const SigmaSchedule& schedule, std::vector<std::size_t> hidden, Rng& rng)
  : dim_(dim), hidden_(std::move(hidden)), sigmas_(schedule.sigmas)
{
    if (dim_ == 0 || sigmas_.empty()) {
        throw DomainError("ScoreNet needs dim >= 1 and at least one noise level");
    }
    for (const double s : sigmas_) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw DomainError("ScoreNet: noise levels must be positive and finite");
        }
    }
    std::size_t fan_in = dim_ + levels();
    for (const auto width : hidden_) {
        if (width == 0) {
            throw DomainError("ScoreNet hidden widths must be positive");
        }
        // LeCun-normal; keeps ELU pre-activations O(1).
        weights_.push_back(gaussian_sample(rng, {fan_in, width}, 0.0, 1.0 / std::sqrt(double(fan_in))));
        biases_.emplace_back(Shape{1, width}, 0.0);
        fan_in = width;
    }
    weights_.emplace_back(Shape{fan_in, dim_}, 0.0);
    biases_.emplace_back(Shape{1, dim_}, 0.0);
}

auto ScoreNet::conditioned_input(const Tensor& x, std::span<const std::size_t> level_index) const -> Tensor
{
    if (x.cols() != dim_ || x.rows() != level_index.size()) {
        throw DomainError("ScoreNet: input is " + shape_string(x.shape()) + ", expected (B, "
                          + std::to_string(dim_) + ") with one level per row");
    }
    const std::size_t width = dim_ + levels();
    Tensor in = Tensor::matrix(x.rows(), width);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        if (level_index[b] >= levels()) {
            throw DomainError("ScoreNet: level " + std::to_string(level_index[b]) + " out of range [0, "
                              + std::to_string(levels()) + ")");
        }
        for (std::size_t j = 0; j < dim_; ++j) {
            in(b, j) = x(b, j);
        }
        in(b, dim_ + level_index[b]) = 1.0;
    }
    return in;
}

auto ScoreNet::score(const Tensor& x, std::size_t level) const -> Tensor
{
    if (level >= levels()) {
        throw DomainError("ScoreNet::score: level " + std::to_string(level) + " out of range [0, "
                          + std::to_string(levels()) + ")");
    }
    const std::vector<std::size_t> index(x.rows(), level);
    Tensor h = conditioned_input(x, index);
    const std::size_t rows = x.rows();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Tensor& w = weights_[l];
        const Tensor& b = biases_[l];
        Tensor next = Tensor::matrix(rows, w.cols());
        kernels::gemm_nn(h.data(), w.data(), next.data(), {rows, w.rows(), w.cols()});
        const bool last = l + 1 == weights_.size();
        for (std::size_t r = 0; r < rows; ++r) {
            auto out = next.row(r);
            for (std::size_t c = 0; c < out.size(); ++c) {
                const double z = out[c] + b[c];
                out[c] = (last || z > 0.0) ? z : std::expm1(z);
            }
        }
        h = std::move(next);
    }
    const double inv_sigma = 1.0 / sigmas_[level];
    for (auto& v : h.data()) {
        v *= inv_sigma;
    }
    return h;
}

auto ScoreNet::forward(ad::Var input, std::span<const std::size_t> level_index,
                       std::span<const ad::Var> params) const -> ad::Var
{
    if (params.size() != 2 * weights_.size()) {
        throw ContractError("ScoreNet::forward: expected " + std::to_string(2 * weights_.size())
                            + " parameter vars");
    }
    ad::Var h = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = ad::add(ad::matmul(h, params[2 * l]), params[2 * l + 1]);
        if (l + 1 < weights_.size()) {
            h = ad::elu(h);
        }
    }
    const Tensor& value = h.value();
    if (level_index.size() != value.rows()) {
        throw ContractError("ScoreNet::forward: one level per row required");
    }
    Tensor inv_sigma(value.shape());
    for (std::size_t b = 0; b < value.rows(); ++b) {
        const double w = 1.0 / sigmas_.at(level_index[b]);
        for (auto& v : inv_sigma.row(b)) {
            v = w;
        }
    }
    return ad::mul(h, input.tape()->constant(std::move(inv_sigma)));
}

auto ScoreNet::parameters() -> std::vector<Tensor*>
{
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

auto ScoreNet::parameters() const -> std::vector<const Tensor*>
{
    std::vector<const Tensor*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

auto ScoreNet::parameter_count() const -> std::size_t
{
    std::size_t n = 0;
    for (const auto* p : parameters()) {
        n += p->size();
    }
    return n;
}

namespace {

struct RecordedLoss
{
    ad::Var loss;
    std::vector<ad::Var> params;
};

auto record_loss(ad::Tape& tape, const ScoreNet& net, const PerturbedBatch& batch,
                 const SigmaSchedule& schedule) -> RecordedLoss
{
    const std::size_t rows = batch.noisy.rows();
    const std::size_t cols = batch.noisy.cols();
    if (rows == 0 || batch.level_index.size() != rows) {
        throw DomainError("dsm_loss: malformed batch");
    }
    RecordedLoss rec;
    for (const Tensor* p : net.parameters()) {
        rec.params.push_back(tape.variable(*p));
    }
    const ad::Var input = tape.constant(net.conditioned_input(batch.noisy, batch.level_index));
    const ad::Var out = net.forward(input, batch.level_index, rec.params);

    // 0.5 * || sigma * s + (noisy - clean) / sigma ||^2
    Tensor sigma_rows(batch.noisy.shape());
    Tensor offset(batch.noisy.shape());
    for (std::size_t b = 0; b < rows; ++b) {
        const double sigma = schedule.sigmas.at(batch.level_index[b]);
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t i = b * cols + j;
            sigma_rows[i] = sigma;
            offset[i] = (batch.noisy[i] - batch.clean[i]) / sigma;
        }
    }
    const ad::Var residual = ad::add(ad::mul(out, tape.constant(std::move(sigma_rows))),
                                     tape.constant(std::move(offset)));
    rec.loss = ad::scale(ad::sum(ad::square(residual)), 0.5 / static_cast<double>(rows));
    return rec;
}

} // namespace

auto dsm_loss(const ScoreNet& net, const PerturbedBatch& batch, const SigmaSchedule& schedule) -> double
{
    ad::Tape tape;
    return record_loss(tape, net, batch, schedule).loss.value().item();
}

auto dsm_loss_grad(const ScoreNet& net, const PerturbedBatch& batch, const SigmaSchedule& schedule)
    -> LossGrad
{
    ad::Tape tape;
    const RecordedLoss rec = record_loss(tape, net, batch, schedule);
    tape.backward(rec.loss);
    LossGrad out;
    out.loss = rec.loss.value().item();
    out.grads.reserve(rec.params.size());
    for (const auto& p : rec.params) {
        out.grads.push_back(tape.grad(p));
    }
    return out;
}

auto learning_rate_at(const TrainConfig& config, std::size_t step) -> double
{
    const double lr = config.adam.learning_rate;
    if (config.lr_schedule == LrSchedule::constant || config.steps == 1) {
        return lr;
    }
    const double progress = static_cast<double>(step - 1) / static_cast<double>(config.steps - 1);
    return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * progress));
}

auto train(ScoreNet net, const Tensor& data, const SigmaSchedule& schedule, const TrainConfig& config)
    -> TrainResult
{
    if (config.steps < 1 || config.batch_size < 1 || !(config.adam.learning_rate >= 0.0)) {
        throw DomainError("train: need steps >= 1, batch_size >= 1 and learning_rate >= 0");
    }
    if (data.rows() < config.batch_size) {
        throw DomainError("train: dataset has " + std::to_string(data.rows()) + " rows, fewer than batch size "
                          + std::to_string(config.batch_size));
    }
    if (schedule != net.schedule() || data.cols() != net.dim()) {
        throw DomainError("train: network does not match data dimension or noise schedule");
    }

    Rng root(config.seed);
    Rng batch_rng = root.split(1);
    Rng noise_rng = root.split(2);

    const auto params = net.parameters();
    Adam adam(config.adam, params);

    TrainResult result;
    result.loss_history.reserve(config.steps);
    std::vector<std::size_t> order;
    std::size_t cursor = data.rows();
    std::vector<std::size_t> picked(config.batch_size);

    for (std::size_t step = 1; step <= config.steps; ++step) {
        for (auto& idx : picked) {
            if (cursor == data.rows()) {
                order = batch_rng.permutation(data.rows());
                cursor = 0;
            }
            idx = order[cursor++];
        }
        const PerturbedBatch batch = perturb(data.gather_rows(picked), schedule, noise_rng);
        LossGrad lg = dsm_loss_grad(net, batch, schedule);
        if (!std::isfinite(lg.loss)) {
            std::ostringstream msg;
            msg << "training diverged: non-finite loss at step " << step << " (learning rate "
                << config.adam.learning_rate << ")";
            throw NumericalError(msg.str());
        }
        result.loss_history.push_back(lg.loss);
        adam.set_learning_rate(learning_rate_at(config, step));
        adam.step(params, lg.grads);

        if (config.on_checkpoint
            && ((config.checkpoint_every > 0 && step % config.checkpoint_every == 0) || step == config.steps)) {
            config.on_checkpoint(step, net);
        }
    }
    result.net = std::move(net);
    return result;
}

} // namespace msma
