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

#ifndef BDL_NETWORK_HPP
#define BDL_NETWORK_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "bdl/tape.hpp"
#include "bdl/tensor.hpp"

namespace bdl {

enum class Activation { identity, tanh, softmax };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Feedforward architecture: layer widths [d0, d1, ..., dK] and one
/// activation per layer.  Biases are absorbed into the weight blocks by a
/// constant input of one, so layer i is a (d_{i-1}+1) x d_i matrix and all
/// parameters live in one flat vector.
struct NetworkSpec {
    std::vector<std::size_t> widths;
    std::vector<Activation> activations;

    /// Throws ShapeError on empty/invalid widths, wrong activation count,
    /// or softmax anywhere but the terminal layer.
    void validate() const;

    std::size_t depth() const { return activations.size(); }
    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
    std::size_t param_count() const;

    struct Block {
        std::size_t offset;
        std::size_t rows;  // d_{i-1} + 1; the last row is the bias slice
        std::size_t cols;  // d_i
    };
    Block layer_block(std::size_t layer) const;

    bool operator==(const NetworkSpec&) const = default;
};

/// Spec with tanh hidden layers and an identity (regression) or softmax
/// (classification) output.
NetworkSpec make_spec(std::vector<std::size_t> widths, bool softmax_output);

/// Differentiable forward pass; x enters the tape as a constant leaf.
/// With skip_terminal_softmax the final softmax is replaced by identity so
/// likelihood code can consume raw logits.
Var network_forward(Tape& tape, const NetworkSpec& spec, Var params, const Tensor& x,
                    bool skip_terminal_softmax = false);

/// Tape-free forward pass; follows the same kernel sequence as
/// network_forward, so results are bit-identical.
Tensor network_eval(const NetworkSpec& spec, const Tensor& params, const Tensor& x,
                    bool skip_terminal_softmax = false);

/// Row-wise softmax, max-shifted: exp(z - logsumexp(z)) per row.
Tensor softmax_rows(const Tensor& z);

}  // namespace bdl

#endif  // BDL_NETWORK_HPP
