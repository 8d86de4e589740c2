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

#include "msma/adam.hpp"

#include "msma/errors.hpp"

#include <cmath>

namespace msma {

Adam::Adam(AdamConfig config, std::span<Tensor* const> params) : config_(config)
{
    if (!(config_.learning_rate >= 0.0) || !(config_.epsilon > 0.0)) {
        throw DomainError("Adam: learning rate must be >= 0 and epsilon > 0");
    }
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->shape(), 0.0);
        v_.emplace_back(p->shape(), 0.0);
    }
}

void Adam::set_learning_rate(double lr)
{
    if (!(lr >= 0.0)) {
        throw DomainError("Adam: learning rate must be >= 0");
    }
    config_.learning_rate = lr;
}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads)
{
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ContractError("Adam::step: parameter list changed");
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double lr = config_.learning_rate;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k]->data();
        const auto g = grads[k].data();
        auto m = m_[k].data();
        auto v = v_[k].data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

} // namespace msma
