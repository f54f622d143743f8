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

#include "bdl/tape.hpp"

#include <cmath>
#include <string>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"

namespace bdl {

namespace {

using kernels::ops;

bool broadcast_compatible(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) || a.is_scalar() || b.is_scalar();
}

void require_broadcast(const Tensor& a, const Tensor& b, const char* op) {
    if (!broadcast_compatible(a, b)) {
        throw ShapeError(std::string(op) + ": shape mismatch between " + a.shape_str() + " and " +
                         b.shape_str());
    }
}

const std::vector<std::size_t>& result_shape(const Tensor& a, const Tensor& b) {
    return a.is_scalar() ? b.shape() : a.shape();
}

}  // namespace

Tape::Tape() { nodes_.reserve(64); }

void Tape::check_var(Var v) const {
    if (v.node < 0 || static_cast<std::size_t>(v.node) >= nodes_.size()) {
        throw std::invalid_argument("tape: variable handle does not belong to this tape");
    }
}

const Tape::Node& Tape::node(Var v) const {
    check_var(v);
    return nodes_[static_cast<std::size_t>(v.node)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

int Tape::push(Node n, const char* op_name) {
    if (n.op != Op::leaf && !n.value.all_finite()) {
        throw NumericError(std::string(op_name) + ": produced a non-finite value (numeric overflow)");
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
    Node n{Op::leaf};
    n.value = std::move(value);
    return {push(std::move(n), "leaf")};
}

Var Tape::add(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require_broadcast(va, vb, "add");
    Tensor out = Tensor::zeros(result_shape(va, vb));
    if (va.same_shape(vb)) {
        ops().add(va.data(), vb.data(), out.data(), out.numel());
    } else if (vb.is_scalar()) {
        ops().adds(va.data(), vb[0], out.data(), out.numel());
    } else {
        ops().adds(vb.data(), va[0], out.data(), out.numel());
    }
    Node n{Op::add, a.node, b.node};
    n.value = std::move(out);
    return {push(std::move(n), "add")};
}

Var Tape::sub(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require_broadcast(va, vb, "sub");
    Tensor out = Tensor::zeros(result_shape(va, vb));
    if (va.same_shape(vb)) {
        ops().sub(va.data(), vb.data(), out.data(), out.numel());
    } else if (vb.is_scalar()) {
        ops().adds(va.data(), -vb[0], out.data(), out.numel());
    } else {
        ops().ssub(va[0], vb.data(), out.data(), out.numel());
    }
    Node n{Op::sub, a.node, b.node};
    n.value = std::move(out);
    return {push(std::move(n), "sub")};
}

Var Tape::mul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require_broadcast(va, vb, "mul");
    Tensor out = Tensor::zeros(result_shape(va, vb));
    if (va.same_shape(vb)) {
        ops().mul(va.data(), vb.data(), out.data(), out.numel());
    } else if (vb.is_scalar()) {
        ops().muls(va.data(), vb[0], out.data(), out.numel());
    } else {
        ops().muls(vb.data(), va[0], out.data(), out.numel());
    }
    Node n{Op::mul, a.node, b.node};
    n.value = std::move(out);
    return {push(std::move(n), "mul")};
}

Var Tape::div(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require_broadcast(va, vb, "div");
    Tensor out = Tensor::zeros(result_shape(va, vb));
    if (va.same_shape(vb)) {
        ops().div(va.data(), vb.data(), out.data(), out.numel());
    } else if (vb.is_scalar()) {
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] / vb[0];
    } else {
        ops().sdiv(va[0], vb.data(), out.data(), out.numel());
    }
    Node n{Op::div, a.node, b.node};
    n.value = std::move(out);
    return {push(std::move(n), "div")};
}

Var Tape::exp(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    kernels::exp_v(va.data(), out.data(), out.numel());
    Node n{Op::exp, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "exp")};
}

Var Tape::ln(Var a) {
    const Tensor& va = value(a);
    for (std::size_t i = 0; i < va.numel(); ++i) {
        if (!(va[i] > 0.0)) {
            throw NumericError("ln: domain error, input entry " + std::to_string(i) + " is " +
                               std::to_string(va[i]));
        }
    }
    Tensor out = Tensor::zeros(va.shape());
    kernels::log_v(va.data(), out.data(), out.numel());
    Node n{Op::ln, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "ln")};
}

Var Tape::tanh(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    kernels::tanh_v(va.data(), out.data(), out.numel());
    Node n{Op::tanh, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "tanh")};
}

Var Tape::square(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    ops().square(va.data(), out.data(), out.numel());
    Node n{Op::square, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "square")};
}

Var Tape::softplus(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    kernels::softplus_v(va.data(), out.data(), out.numel());
    Node n{Op::softplus, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "softplus")};
}

Var Tape::abs(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    ops().abs(va.data(), out.data(), out.numel());
    Node n{Op::abs, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "abs")};
}

Var Tape::scale(Var a, double c) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    ops().muls(va.data(), c, out.data(), out.numel());
    Node n{Op::scale, a.node};
    n.value = std::move(out);
    n.c = c;
    return {push(std::move(n), "scale")};
}

Var Tape::add_const(Var a, double c) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros(va.shape());
    ops().adds(va.data(), c, out.data(), out.numel());
    Node n{Op::add_const, a.node};
    n.value = std::move(out);
    n.c = c;
    return {push(std::move(n), "add_const")};
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.ndim() != 2 || vb.ndim() != 2 || va.cols() != vb.rows()) {
        throw ShapeError("matmul: shape mismatch between " + va.shape_str() + " and " +
                         vb.shape_str());
    }
    Tensor out = Tensor::zeros({va.rows(), vb.cols()});
    ops().matmul_nn_acc(va.rows(), va.cols(), vb.cols(), va.data(), vb.data(), out.data());
    Node n{Op::matmul, a.node, b.node};
    n.value = std::move(out);
    return {push(std::move(n), "matmul")};
}

Var Tape::sum(Var a) {
    const Tensor& va = value(a);
    Tensor out = Tensor::scalar(ops().sum(va.data(), va.numel()));
    Node n{Op::sum, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "sum")};
}

Var Tape::append_ones(Var a) {
    const Tensor& va = value(a);
    if (va.ndim() != 2) {
        throw ShapeError("append_ones: expected a 2-D tensor, got " + va.shape_str());
    }
    const std::size_t m = va.rows();
    const std::size_t d = va.cols();
    Tensor out = Tensor::zeros({m, d + 1});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.at(i, j) = va.at(i, j);
        }
        out.at(i, d) = 1.0;
    }
    Node n{Op::append_ones, a.node};
    n.value = std::move(out);
    return {push(std::move(n), "append_ones")};
}

Var Tape::block(Var flat, std::size_t offset, std::size_t rows, std::size_t cols) {
    const Tensor& vf = value(flat);
    if (vf.ndim() != 1) {
        throw ShapeError("block: expected a flat 1-D tensor, got " + vf.shape_str());
    }
    if (offset + rows * cols > vf.numel()) {
        throw ShapeError("block: slice [" + std::to_string(offset) + ", " +
                         std::to_string(offset + rows * cols) + ") exceeds flat length " +
                         std::to_string(vf.numel()));
    }
    std::vector<double> data(vf.data() + offset, vf.data() + offset + rows * cols);
    Node n{Op::block, flat.node};
    n.value = Tensor({rows, cols}, std::move(data));
    n.offset = offset;
    return {push(std::move(n), "block")};
}

Var Tape::log_softmax_rows(Var z) {
    const Tensor& vz = value(z);
    if (vz.ndim() != 2) {
        throw ShapeError("log_softmax_rows: expected a 2-D tensor, got " + vz.shape_str());
    }
    const std::size_t m = vz.rows();
    const std::size_t c = vz.cols();
    Tensor out = Tensor::zeros({m, c});
    for (std::size_t i = 0; i < m; ++i) {
        const double* zrow = vz.data() + i * c;
        double* orow = out.data() + i * c;
        double mx = zrow[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, zrow[j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(zrow[j] - mx);
        lse = mx + std::log(lse);
        for (std::size_t j = 0; j < c; ++j) orow[j] = zrow[j] - lse;
    }
    Node n{Op::log_softmax, z.node};
    n.value = std::move(out);
    return {push(std::move(n), "log_softmax_rows")};
}

Var Tape::pick_rows(Var a, const std::vector<int>& labels) {
    const Tensor& va = value(a);
    if (va.ndim() != 2 || labels.size() != va.rows()) {
        throw ShapeError("pick_rows: need one label per row of " + va.shape_str() + ", got " +
                         std::to_string(labels.size()));
    }
    const std::size_t c = va.cols();
    Tensor out = Tensor::zeros({va.rows(), 1});
    for (std::size_t i = 0; i < va.rows(); ++i) {
        const int lab = labels[i];
        if (lab < 0 || static_cast<std::size_t>(lab) >= c) {
            throw DataError("pick_rows: label " + std::to_string(lab) + " out of range [0, " +
                            std::to_string(c) + ") at row " + std::to_string(i));
        }
        out.at(i, 0) = va.at(i, static_cast<std::size_t>(lab));
    }
    Node n{Op::pick_rows, a.node};
    n.value = std::move(out);
    n.labels = labels;
    return {push(std::move(n), "pick_rows")};
}

Var Tape::logpdf_sum(Var w, const ScalarPdf& pdf) {
    const Tensor& vw = value(w);
    Tensor deriv = Tensor::zeros(vw.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < vw.numel(); ++i) {
        double lp = 0.0;
        double dlp = 0.0;
        pdf.eval(vw[i], lp, dlp);
        total += lp;
        deriv[i] = dlp;
    }
    Node n{Op::logpdf_sum, w.node};
    n.value = Tensor::scalar(total);
    n.aux = std::move(deriv);
    if (!n.aux.all_finite()) {
        throw NumericError("logpdf_sum: non-finite derivative from density evaluation");
    }
    return {push(std::move(n), "logpdf_sum")};
}

namespace {

// Gradient buffers are allocated on first touch; numel() == 0 marks "unset".
Tensor& touch(std::vector<Tensor>& grads, int idx, const Tensor& like) {
    Tensor& g = grads[static_cast<std::size_t>(idx)];
    if (g.numel() == 0) {
        g = Tensor::zeros(like.shape());
    }
    return g;
}

void acc_scaled_sum(Tensor& dst, const Tensor& g, double scalar_grad_weight) {
    // dst is scalar: add the total of g times weight
    dst[0] += kernels::ops().sum(g.data(), g.numel()) * scalar_grad_weight;
}

}  // namespace

GradientMap Tape::backward(Var root) const {
    check_var(root);
    const Node& r = nodes_[static_cast<std::size_t>(root.node)];
    if (r.value.numel() != 1) {
        throw ShapeError("backward: root must be a scalar, got shape " + r.value.shape_str());
    }

    std::vector<Tensor> grads(nodes_.size());
    grads[static_cast<std::size_t>(root.node)] = Tensor::scalar(1.0);

    const auto& K = ops();
    for (int idx = root.node; idx >= 0; --idx) {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        const Tensor& g = grads[static_cast<std::size_t>(idx)];
        if (g.numel() == 0 || n.op == Op::leaf) {
            continue;
        }
        const Tensor* va = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)].value : nullptr;
        const Tensor* vb = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)].value : nullptr;

        switch (n.op) {
            case Op::add: {
                Tensor& ga = touch(grads, n.a, *va);
                if (va->same_shape(g)) {
                    K.acc(ga.data(), g.data(), g.numel());
                } else {
                    acc_scaled_sum(ga, g, 1.0);
                }
                Tensor& gb = touch(grads, n.b, *vb);
                if (vb->same_shape(g)) {
                    K.acc(gb.data(), g.data(), g.numel());
                } else {
                    acc_scaled_sum(gb, g, 1.0);
                }
                break;
            }
            case Op::sub: {
                Tensor& ga = touch(grads, n.a, *va);
                if (va->same_shape(g)) {
                    K.acc(ga.data(), g.data(), g.numel());
                } else {
                    acc_scaled_sum(ga, g, 1.0);
                }
                Tensor& gb = touch(grads, n.b, *vb);
                if (vb->same_shape(g)) {
                    K.acc_muls(gb.data(), g.data(), -1.0, g.numel());
                } else {
                    acc_scaled_sum(gb, g, -1.0);
                }
                break;
            }
            case Op::mul: {
                Tensor& ga = touch(grads, n.a, *va);
                if (va->same_shape(g) && vb->same_shape(g)) {
                    K.acc_mul(ga.data(), g.data(), vb->data(), g.numel());
                    Tensor& gb = touch(grads, n.b, *vb);
                    K.acc_mul(gb.data(), g.data(), va->data(), g.numel());
                } else if (vb->is_scalar()) {
                    K.acc_muls(ga.data(), g.data(), (*vb)[0], g.numel());
                    Tensor& gb = touch(grads, n.b, *vb);
                    gb[0] += K.dot(g.data(), va->data(), g.numel());
                } else {  // va scalar
                    ga[0] += K.dot(g.data(), vb->data(), g.numel());
                    Tensor& gb = touch(grads, n.b, *vb);
                    K.acc_muls(gb.data(), g.data(), (*va)[0], g.numel());
                }
                break;
            }
            case Op::div: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor& gb = touch(grads, n.b, *vb);
                if (va->same_shape(g) && vb->same_shape(g)) {
                    Tensor t = Tensor::zeros(g.shape());
                    K.div(g.data(), vb->data(), t.data(), g.numel());
                    K.acc(ga.data(), t.data(), g.numel());
                    // d/db (a/b) = -value/b
                    K.mul(t.data(), n.value.data(), t.data(), g.numel());
                    K.acc_muls(gb.data(), t.data(), -1.0, g.numel());
                } else if (vb->is_scalar()) {
                    const double inv = 1.0 / (*vb)[0];
                    K.acc_muls(ga.data(), g.data(), inv, g.numel());
                    gb[0] -= K.dot(g.data(), n.value.data(), g.numel()) * inv;
                } else {  // va scalar: out = s / b
                    Tensor t = Tensor::zeros(g.shape());
                    K.div(g.data(), vb->data(), t.data(), g.numel());
                    ga[0] += K.sum(t.data(), g.numel());
                    K.mul(t.data(), n.value.data(), t.data(), g.numel());
                    K.acc_muls(gb.data(), t.data(), -1.0, g.numel());
                }
                break;
            }
            case Op::exp: {
                Tensor& ga = touch(grads, n.a, *va);
                K.acc_mul(ga.data(), g.data(), n.value.data(), g.numel());
                break;
            }
            case Op::ln: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor t = Tensor::zeros(g.shape());
                K.div(g.data(), va->data(), t.data(), g.numel());
                K.acc(ga.data(), t.data(), g.numel());
                break;
            }
            case Op::tanh: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor t = Tensor::zeros(g.shape());
                K.square(n.value.data(), t.data(), g.numel());
                K.ssub(1.0, t.data(), t.data(), g.numel());
                K.mul(t.data(), g.data(), t.data(), g.numel());
                K.acc(ga.data(), t.data(), g.numel());
                break;
            }
            case Op::square: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor t = Tensor::zeros(g.shape());
                K.mul(g.data(), va->data(), t.data(), g.numel());
                K.acc_muls(ga.data(), t.data(), 2.0, g.numel());
                break;
            }
            case Op::softplus: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor t = Tensor::zeros(g.shape());
                kernels::sigmoid_v(va->data(), t.data(), g.numel());
                K.mul(t.data(), g.data(), t.data(), g.numel());
                K.acc(ga.data(), t.data(), g.numel());
                break;
            }
            case Op::abs: {
                Tensor& ga = touch(grads, n.a, *va);
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    const double s = (*va)[i] > 0.0 ? 1.0 : ((*va)[i] < 0.0 ? -1.0 : 0.0);
                    ga[i] += s * g[i];
                }
                break;
            }
            case Op::scale: {
                Tensor& ga = touch(grads, n.a, *va);
                K.acc_muls(ga.data(), g.data(), n.c, g.numel());
                break;
            }
            case Op::add_const: {
                Tensor& ga = touch(grads, n.a, *va);
                K.acc(ga.data(), g.data(), g.numel());
                break;
            }
            case Op::matmul: {
                Tensor& ga = touch(grads, n.a, *va);
                Tensor& gb = touch(grads, n.b, *vb);
                // dA += G B', dB += A' G
                K.matmul_nt_acc(va->rows(), vb->cols(), va->cols(), g.data(), vb->data(),
                                ga.data());
                K.matmul_tn_acc(va->rows(), va->cols(), vb->cols(), va->data(), g.data(),
                                gb.data());
                break;
            }
            case Op::sum: {
                Tensor& ga = touch(grads, n.a, *va);
                const double gs = g[0];
                for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gs;
                break;
            }
            case Op::append_ones: {
                Tensor& ga = touch(grads, n.a, *va);
                const std::size_t m = va->rows();
                const std::size_t d = va->cols();
                for (std::size_t i = 0; i < m; ++i) {
                    K.acc(ga.data() + i * d, g.data() + i * (d + 1), d);
                }
                break;
            }
            case Op::block: {
                Tensor& ga = touch(grads, n.a, *va);
                K.acc(ga.data() + n.offset, g.data(), g.numel());
                break;
            }
            case Op::log_softmax: {
                Tensor& ga = touch(grads, n.a, *va);
                const std::size_t m = n.value.rows();
                const std::size_t c = n.value.cols();
                // dz = g - softmax .* rowsum(g), softmax = exp(value)
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g.data() + i * c;
                    const double* vrow = n.value.data() + i * c;
                    double* garow = ga.data() + i * c;
                    const double gs = K.sum(grow, c);
                    for (std::size_t j = 0; j < c; ++j) {
                        garow[j] += grow[j] - std::exp(vrow[j]) * gs;
                    }
                }
                break;
            }
            case Op::pick_rows: {
                Tensor& ga = touch(grads, n.a, *va);
                const std::size_t c = va->cols();
                for (std::size_t i = 0; i < n.labels.size(); ++i) {
                    ga[i * c + static_cast<std::size_t>(n.labels[i])] += g[i];
                }
                break;
            }
            case Op::logpdf_sum: {
                Tensor& ga = touch(grads, n.a, *va);
                K.acc_muls(ga.data(), n.aux.data(), g[0], n.aux.numel());
                break;
            }
            case Op::leaf:
                break;
        }
    }

    // materialize zero gradients for unreached leaves
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].op == Op::leaf && grads[i].numel() == 0) {
            grads[i] = Tensor::zeros(nodes_[i].value.shape());
        }
    }
    return GradientMap(this, std::move(grads));
}

Tensor GradientMap::grad(Var v) const {
    tape_->check_var(v);
    const Tensor& g = grads_[static_cast<std::size_t>(v.node)];
    if (g.numel() == 0) {
        return Tensor::zeros(tape_->nodes_[static_cast<std::size_t>(v.node)].value.shape());
    }
    return g;
}

double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
    Tape tape;
    Var xv = tape.leaf(x);
    Var y = f(tape, xv);
    GradientMap gm = tape.backward(y);
    Tensor analytic = gm.grad(xv);

    auto eval_at = [&f](const Tensor& point) {
        Tape t;
        Var v = t.leaf(point);
        return t.value(f(t, v)).value();
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor hi = x;
        Tensor lo = x;
        hi[i] += h;
        lo[i] -= h;
        const double numeric = (eval_at(hi) - eval_at(lo)) / (2.0 * h);
        const double a = analytic[i];
        const double err = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace bdl
