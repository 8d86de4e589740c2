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

#include "msma/autodiff.hpp"

#include "msma/errors.hpp"
#include "msma/kernels.hpp"

#include <cmath>
#include <numbers>

namespace msma::ad {

auto Var::value() const -> const Tensor&
{
    if (tape_ == nullptr) {
        throw ContractError("value() on an unbound Var");
    }
    return tape_->value(*this);
}

auto Tape::variable(Tensor value) -> Var
{
    nodes_.push_back(Node{std::move(value), {}, true, false, {}});
    return {this, nodes_.size() - 1};
}

auto Tape::constant(Tensor value) -> Var
{
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return {this, nodes_.size() - 1};
}

auto Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) -> Var
{
    bool needs = false;
    for (const auto& in : inputs) {
        if (in.tape() != this) {
            throw ContractError("primitive applied to a Var from another tape");
        }
        needs = needs || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : Backward{}});
    return {this, nodes_.size() - 1};
}

auto Tape::grad_buffer(Var v) -> Tensor*
{
    auto& node = nodes_.at(v.id());
    if (!node.requires_grad) {
        return nullptr;
    }
    if (!node.has_grad) {
        node.grad = Tensor(node.value.shape(), 0.0);
        node.has_grad = true;
    }
    return &node.grad;
}

void Tape::backward(Var output)
{
    if (output.tape() != this) {
        throw ContractError("backward() on a Var from another tape");
    }
    if (nodes_.at(output.id()).value.size() != 1) {
        throw ContractError("backward() needs a scalar output, got shape "
                            + shape_string(nodes_[output.id()].value.shape()));
    }
    for (auto& node : nodes_) {
        node.has_grad = false;
    }
    Tensor* seed = grad_buffer(output);
    if (seed == nullptr) {
        return;
    }
    (*seed)[0] = 1.0;
    for (std::size_t i = output.id() + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (node.has_grad && node.backward) {
            // The callback may grow other nodes' buffers but never this one's.
            const Tensor upstream = node.grad;
            node.backward(*this, upstream);
        }
    }
}

auto Tape::grad(Var v) const -> Tensor
{
    const auto& node = nodes_.at(v.id());
    if (node.has_grad) {
        return node.grad;
    }
    return Tensor(node.value.shape(), 0.0);
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw DomainError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs "
                          + shape_string(b.shape()));
    }
}

template <class F>
auto map(const Tensor& a, F f) -> Tensor
{
    Tensor out(a.shape());
    const auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = f(src[i]);
    }
    return out;
}

} // namespace

auto add(Var a, Var b) -> Var
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tape& tape = *a.tape();
    if (av.shape() == bv.shape()) {
        Tensor out = av;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += bv[i];
        }
        return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
            for (auto v : {a, b}) {
                if (Tensor* buf = t.grad_buffer(v)) {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        (*buf)[i] += g[i];
                    }
                }
            }
        });
    }
    if (bv.rows() == 1 && bv.cols() == av.cols() && av.rank() == 2) {
        const std::size_t rows = av.rows();
        const std::size_t cols = av.cols();
        Tensor out = av;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                out(r, c) += bv[c];
            }
        }
        return tape.record(std::move(out), {a, b}, [a, b, rows, cols](Tape& t, const Tensor& g) {
            if (Tensor* buf = t.grad_buffer(a)) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    (*buf)[i] += g[i];
                }
            }
            if (Tensor* buf = t.grad_buffer(b)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        (*buf)[c] += g(r, c);
                    }
                }
            }
        });
    }
    throw DomainError("add: incompatible shapes " + shape_string(av.shape()) + " and "
                      + shape_string(bv.shape()));
}

auto sub(Var a, Var b) -> Var
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "sub");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= bv[i];
    }
    return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i];
            }
        }
        if (Tensor* buf = t.grad_buffer(b)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] -= g[i];
            }
        }
    });
}

auto mul(Var a, Var b) -> Var
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "mul");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= bv[i];
    }
    return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i] * bv[i];
            }
        }
        if (Tensor* buf = t.grad_buffer(b)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i] * av[i];
            }
        }
    });
}

auto matmul(Var a, Var b) -> Var
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw DomainError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " x "
                          + shape_string(bv.shape()));
    }
    const kernels::Dims d{av.rows(), av.cols(), bv.cols()};
    Tensor out = Tensor::matrix(d.m, d.n);
    kernels::gemm_nn(av.data(), bv.data(), out.data(), d);
    return a.tape()->record(std::move(out), {a, b}, [a, b, d](Tape& t, const Tensor& g) {
        // dA = G B^T, dB = A^T G
        if (Tensor* buf = t.grad_buffer(a)) {
            kernels::gemm_nt(g.data(), t.value(b).data(), buf->data(), {d.m, d.n, d.k}, true);
        }
        if (Tensor* buf = t.grad_buffer(b)) {
            kernels::gemm_tn(t.value(a).data(), g.data(), buf->data(), {d.k, d.m, d.n}, true);
        }
    });
}

auto scale(Var a, double factor) -> Var
{
    Tensor out = map(a.value(), [factor](double x) { return factor * x; });
    return a.tape()->record(std::move(out), {a}, [a, factor](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += factor * g[i];
            }
        }
    });
}

auto elu(Var a) -> Var
{
    Tensor out = map(a.value(), [](double x) { return x > 0.0 ? x : std::expm1(x); });
    return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            const Tensor& x = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i] * (x[i] > 0.0 ? 1.0 : std::exp(x[i]));
            }
        }
    });
}

auto tanh(Var a) -> Var
{
    Tensor out = map(a.value(), [](double x) { return std::tanh(x); });
    const Tensor y = out;
    return a.tape()->record(std::move(out), {a}, [a, y](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i] * (1.0 - y[i] * y[i]);
            }
        }
    });
}

auto exp(Var a) -> Var
{
    Tensor out = map(a.value(), [](double x) { return std::exp(x); });
    const Tensor y = out;
    return a.tape()->record(std::move(out), {a}, [a, y](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += g[i] * y[i];
            }
        }
    });
}

auto square(Var a) -> Var
{
    Tensor out = map(a.value(), [](double x) { return x * x; });
    return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            const Tensor& x = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] += 2.0 * x[i] * g[i];
            }
        }
    });
}

auto sum(Var a) -> Var
{
    double s = 0.0;
    for (const double v : a.value().data()) {
        s += v;
    }
    return a.tape()->record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            const double g0 = g[0];
            for (auto& v : buf->data()) {
                v += g0;
            }
        }
    });
}

auto sum_rows(Var a) -> Var
{
    const Tensor& av = a.value();
    const std::size_t rows = av.rows();
    const std::size_t cols = av.cols();
    Tensor out = Tensor::matrix(rows, 1);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            s += av(r, c);
        }
        out[r] = s;
    }
    return a.tape()->record(std::move(out), {a}, [a, rows, cols](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    (*buf)(r, c) += g[r];
                }
            }
        }
    });
}

auto slice_cols(Var a, std::size_t begin, std::size_t end) -> Var
{
    const Tensor& av = a.value();
    if (begin >= end || end > av.cols()) {
        throw DomainError("slice_cols: bad range [" + std::to_string(begin) + ", " + std::to_string(end)
                          + ") for " + shape_string(av.shape()));
    }
    const std::size_t rows = av.rows();
    const std::size_t width = end - begin;
    Tensor out = Tensor::matrix(rows, width);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            out(r, c) = av(r, begin + c);
        }
    }
    return a.tape()->record(std::move(out), {a}, [a, begin, rows, width](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < width; ++c) {
                    (*buf)(r, begin + c) += g(r, c);
                }
            }
        }
    });
}

auto gaussian_logpdf(Var a) -> Var
{
    static const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Tensor out = map(a.value(), [](double x) { return -0.5 * x * x - half_log_2pi; });
    return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
        if (Tensor* buf = t.grad_buffer(a)) {
            const Tensor& x = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*buf)[i] -= g[i] * x[i];
            }
        }
    });
}

auto grad(const std::function<Var(Var)>& f, const Tensor& x) -> Tensor
{
    Tape tape;
    const Var input = tape.variable(x);
    const Var out = f(input);
    if (out.tape() != &tape) {
        throw ContractError("grad: f returned a Var from another tape");
    }
    tape.backward(out);
    return tape.grad(input);
}

} // namespace msma::ad
