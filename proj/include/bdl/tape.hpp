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

#ifndef BDL_TAPE_HPP
#define BDL_TAPE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "bdl/tensor.hpp"

namespace bdl {

/// Handle to a node on a Tape.  Only meaningful together with the tape that
/// produced it.
struct Var {
    int node = -1;
    bool valid() const { return node >= 0; }
};

/// Custom elementwise log-density hook: forward value and d(logp)/dw in one
/// evaluation.  Implementations must outlive any tape that references them.
class ScalarPdf {
  public:
    virtual ~ScalarPdf() = default;
    virtual void eval(double w, double& logp, double& dlogp_dw) const = 0;
};

class GradientMap;

/// Define-by-run computation graph over tensors.  A tape is rebuilt per
/// forward pass and confined to one thread; node inputs always precede the
/// node in creation order, so the graph is acyclic by construction.
///
/// Every op validates shapes and rejects non-finite results (NumericError),
/// so finite inputs either produce finite tensors or fail loudly.
class Tape {
  public:
    Tape();

    Var leaf(Tensor value);

    // binary elementwise; shapes must match or one operand must be scalar
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);

    // unary elementwise
    Var exp(Var a);
    Var ln(Var a);  // domain error on non-positive entries
    Var tanh(Var a);
    Var square(Var a);
    Var softplus(Var a);
    Var abs(Var a);

    // tensor with constant
    Var scale(Var a, double c);
    Var add_const(Var a, double c);

    Var matmul(Var a, Var b);

    /// Total over all entries; result is a scalar tensor.
    Var sum(Var a);

    /// [m x d] -> [m x (d+1)] with a trailing column of ones.
    Var append_ones(Var a);

    /// View of a flat vector as a [rows x cols] matrix starting at offset.
    Var block(Var flat, std::size_t offset, std::size_t rows, std::size_t cols);

    /// Row-wise log softmax with max-shift stabilization.
    Var log_softmax_rows(Var z);

    /// out[i] = a[i, labels[i]]; result is [batch x 1].
    Var pick_rows(Var a, const std::vector<int>& labels);

    /// Scalar sum of pdf.eval over all entries; the per-entry derivative is
    /// cached for the backward pass.
    Var logpdf_sum(Var w, const ScalarPdf& pdf);

    const Tensor& value(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Reverse-mode gradients of a scalar root with respect to every leaf.
    /// Leaves the root cannot reach get zero gradients.
    GradientMap backward(Var root) const;

  private:
    friend class GradientMap;

    enum class Op {
        leaf,
        add,
        sub,
        mul,
        div,
        exp,
        ln,
        tanh,
        square,
        softplus,
        abs,
        scale,
        add_const,
        matmul,
        sum,
        append_ones,
        block,
        log_softmax,
        pick_rows,
        logpdf_sum,
    };

    struct Node {
        Node(Op o, int pa = -1, int pb = -1) : op(o), a(pa), b(pb) {}

        Op op;
        int a = -1;
        int b = -1;
        Tensor value;
        Tensor aux;               // op-specific cache (logpdf derivative)
        double c = 0.0;           // constant for scale/add_const
        std::size_t offset = 0;   // block slice
        std::vector<int> labels;  // pick_rows
    };

    int push(Node node, const char* op_name);
    const Node& node(Var v) const;
    void check_var(Var v) const;

    std::vector<Node> nodes_;
};

/// Result of Tape::backward.  Holds one gradient tensor per reachable node;
/// queries for unreached nodes return zeros of the node's shape.
class GradientMap {
  public:
    Tensor grad(Var v) const;

  private:
    friend class Tape;
    GradientMap(const Tape* tape, std::vector<Tensor> grads)
        : tape_(tape), grads_(std::move(grads)) {}

    const Tape* tape_;
    std::vector<Tensor> grads_;
};

/// Max over coordinates of |analytic - numeric| / max(1, |analytic|,
/// |numeric|), comparing backward() against central differences of f.
double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h);

}  // namespace bdl

#endif  // BDL_TAPE_HPP
