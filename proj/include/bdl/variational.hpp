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

#ifndef BDL_VARIATIONAL_HPP
#define BDL_VARIATIONAL_HPP

#include <span>
#include <vector>

#include "bdl/network.hpp"
#include "bdl/priors.hpp"
#include "bdl/rng.hpp"
#include "bdl/tape.hpp"
#include "bdl/tensor.hpp"

namespace bdl {

enum class Task { regression, classification };

const char* task_name(Task t);
Task parse_task(const std::string& name);

/// A training batch: inputs plus either real-valued targets or class labels.
struct Batch {
    Tensor x;                 // M x d0
    Tensor y;                 // M x n_out (regression)
    std::vector<int> labels;  // M entries   (classification)

    std::size_t size() const { return x.rows(); }
};

/// Mean-field Gaussian proxy posterior over the flat parameter vector: one
/// (mu, rho) pair per weight with sigma = softplus(rho), plus the
/// homoscedastic observation-noise precision used for regression.
struct VariationalState {
    Tensor mu;
    Tensor rho;
    double tau_eps = 1.0;

    std::size_t size() const { return mu.numel(); }
    /// sigma = softplus(rho), strictly positive for finite rho.
    Tensor sigma() const;
};

/// Initial state: mu entries drawn from N(0, 1/fan_in) per layer block (the
/// bias row counts toward fan-in), rho constant at softplus_inv(0.05).
VariationalState init_variational(const NetworkSpec& spec, double tau_eps, Rng& rng);

struct ElboEstimate {
    double elbo = 0.0;
    double data_term = 0.0;
    double kl_term = 0.0;
    int samples_used = 0;
};

struct ElboGradients {
    Tensor g_mu;
    Tensor g_rho;
    ElboEstimate estimate;

    /// [g_mu, g_rho] concatenated; length 2 * param_count.
    Tensor concatenated() const;
};

/// omega = mu + softplus(rho) .* eps, recorded on the tape so gradients
/// reach mu and rho.  Returns the weight variable; mu_var/rho_var receive
/// the leaf handles when non-null.
Var sample_weights(Tape& tape, const VariationalState& vs, const Tensor& eps, Var* mu_var,
                   Var* rho_var);

/// Convenience draw without a tape.
Tensor sample_weights_value(const VariationalState& vs, const Tensor& eps);

/// Sum over weights of log N(omega_i | mu_i, sigma_i^2) as a tape
/// expression over the given mu/rho leaves.
Var log_q(Tape& tape, Var mu, Var rho, Var omega);

double log_q_value(const VariationalState& vs, const Tensor& omega);

/// Log-likelihood of a batch under fixed weights.
/// regression:      sum_i [ (n_out/2) ln(tau/2pi) - (tau/2) |y_i - f(x_i)|^2 ]
/// classification:  sum_i ln softmax(f(x_i))[label_i]  (f yields logits)
Var log_likelihood(Tape& tape, const NetworkSpec& spec, Var params, const Batch& batch,
                   double tau_eps, Task task);

double log_likelihood_value(const NetworkSpec& spec, const Tensor& params, const Batch& batch,
                            double tau_eps, Task task);

/// Monte Carlo mini-batch estimate of the evidence lower bound with N/M
/// likelihood scaling:
///   (1/S) sum_s [ (N/M) log p(batch | w_s) + log p(w_s) - log q(w_s) ]
/// data_term and kl_term are reported separately and elbo = data_term -
/// kl_term holds exactly.
ElboEstimate elbo_minibatch(const NetworkSpec& spec, const VariationalState& vs,
                            const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                            int n_samples, Rng& rng);

/// Same estimate with caller-provided noise draws (one tensor per sample);
/// used by the common-random-numbers gradient checks.
ElboEstimate elbo_minibatch_eps(const NetworkSpec& spec, const VariationalState& vs,
                                const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                                std::span<const Tensor> eps);

/// Reparameterized (pathwise) gradient: reverse-mode derivative of the
/// S-sample ELBO estimate with respect to mu and rho, flowing through the
/// sampling transform.
ElboGradients elbo_grad_pathwise(const NetworkSpec& spec, const VariationalState& vs,
                                 const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                                 int n_samples, Rng& rng);

ElboGradients elbo_grad_pathwise_eps(const NetworkSpec& spec, const VariationalState& vs,
                                     const PriorSpec& prior, const Batch& batch,
                                     std::size_t n_total, std::span<const Tensor> eps);

/// Score-function (log-derivative) gradient estimator; higher variance,
/// kept for the estimator-variance comparison.  Per sample:
///   grad log q(w_s) * (A(w_s) - 1),  A = (N/M) log lik + log prior - log q.
ElboGradients elbo_grad_score(const NetworkSpec& spec, const VariationalState& vs,
                              const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                              int n_samples, Rng& rng);

}  // namespace bdl

#endif  // BDL_VARIATIONAL_HPP
