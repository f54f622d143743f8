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

#include "bdl/network.hpp"

#include <cmath>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"

namespace bdl {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation parse_activation(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "softmax") return Activation::softmax;
    throw UsageError("unknown activation '" + name + "' (expected identity|tanh|softmax)");
}

void NetworkSpec::validate() const {
    if (widths.size() < 2) {
        throw ShapeError("network needs at least an input and an output layer");
    }
    for (std::size_t w : widths) {
        if (w == 0) {
            throw ShapeError("layer widths must be positive");
        }
    }
    if (activations.size() != widths.size() - 1) {
        throw ShapeError("need one activation per layer: got " +
                         std::to_string(activations.size()) + " for " +
                         std::to_string(widths.size() - 1) + " layers");
    }
    for (std::size_t i = 0; i + 1 < activations.size(); ++i) {
        if (activations[i] == Activation::softmax) {
            throw ShapeError("softmax is only permitted on the terminal layer");
        }
    }
}

std::size_t NetworkSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        n += (widths[i] + 1) * widths[i + 1];
    }
    return n;
}

NetworkSpec::Block NetworkSpec::layer_block(std::size_t layer) const {
    if (layer >= depth()) {
        throw ShapeError("layer index " + std::to_string(layer) + " out of range [0, " +
                         std::to_string(depth()) + ")");
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layer; ++i) {
        offset += (widths[i] + 1) * widths[i + 1];
    }
    return {offset, widths[layer] + 1, widths[layer + 1]};
}

NetworkSpec make_spec(std::vector<std::size_t> widths, bool softmax_output) {
    NetworkSpec spec;
    spec.widths = std::move(widths);
    if (spec.widths.size() >= 2) {
        spec.activations.assign(spec.widths.size() - 1, Activation::tanh);
        spec.activations.back() = softmax_output ? Activation::softmax : Activation::identity;
    }
    spec.validate();
    return spec;
}

Var network_forward(Tape& tape, const NetworkSpec& spec, Var params, const Tensor& x,
                    bool skip_terminal_softmax) {
    spec.validate();
    if (x.ndim() != 2 || x.cols() != spec.input_dim()) {
        throw ShapeError("network_forward: input " + x.shape_str() + " does not match input dim " +
                         std::to_string(spec.input_dim()));
    }
    if (tape.value(params).numel() != spec.param_count()) {
        throw ShapeError("network_forward: parameter vector length " +
                         std::to_string(tape.value(params).numel()) + " != " +
                         std::to_string(spec.param_count()));
    }
    Var h = tape.leaf(x);
    for (std::size_t layer = 0; layer < spec.depth(); ++layer) {
        const auto blk = spec.layer_block(layer);
        Var w = tape.block(params, blk.offset, blk.rows, blk.cols);
        Var z = tape.matmul(tape.append_ones(h), w);
        switch (spec.activations[layer]) {
            case Activation::identity:
                h = z;
                break;
            case Activation::tanh:
                h = tape.tanh(z);
                break;
            case Activation::softmax:
                h = skip_terminal_softmax ? z : tape.exp(tape.log_softmax_rows(z));
                break;
        }
    }
    return h;
}

Tensor network_eval(const NetworkSpec& spec, const Tensor& params, const Tensor& x,
                    bool skip_terminal_softmax) {
    spec.validate();
    if (x.ndim() != 2 || x.cols() != spec.input_dim()) {
        throw ShapeError("network_eval: input " + x.shape_str() + " does not match input dim " +
                         std::to_string(spec.input_dim()));
    }
    if (params.numel() != spec.param_count()) {
        throw ShapeError("network_eval: parameter vector length " +
                         std::to_string(params.numel()) + " != " +
                         std::to_string(spec.param_count()));
    }
    const auto& K = kernels::ops();
    Tensor h = x;
    for (std::size_t layer = 0; layer < spec.depth(); ++layer) {
        const auto blk = spec.layer_block(layer);
        const std::size_t m = h.rows();
        const std::size_t d = h.cols();
        Tensor aug = Tensor::zeros({m, d + 1});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                aug.at(i, j) = h.at(i, j);
            }
            aug.at(i, d) = 1.0;
        }
        Tensor z = Tensor::zeros({m, blk.cols});
        K.matmul_nn_acc(m, blk.rows, blk.cols, aug.data(), params.data() + blk.offset, z.data());
        switch (spec.activations[layer]) {
            case Activation::identity:
                h = std::move(z);
                break;
            case Activation::tanh:
                kernels::tanh_v(z.data(), z.data(), z.numel());
                h = std::move(z);
                break;
            case Activation::softmax:
                h = skip_terminal_softmax ? std::move(z) : softmax_rows(z);
                break;
        }
    }
    return h;
}

Tensor softmax_rows(const Tensor& z) {
    if (z.ndim() != 2) {
        throw ShapeError("softmax_rows: expected a 2-D tensor, got " + z.shape_str());
    }
    const std::size_t m = z.rows();
    const std::size_t c = z.cols();
    Tensor out = Tensor::zeros({m, c});
    for (std::size_t i = 0; i < m; ++i) {
        const double* zrow = z.data() + i * c;
        double* orow = out.data() + i * c;
        double mx = zrow[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, zrow[j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(zrow[j] - mx);
        lse = mx + std::log(lse);
        for (std::size_t j = 0; j < c; ++j) orow[j] = std::exp(zrow[j] - lse);
    }
    return out;
}

}  // namespace bdl
