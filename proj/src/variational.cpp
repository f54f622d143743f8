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

#include "bdl/variational.hpp"

#include <cmath>
#include <numbers>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"

namespace bdl {

namespace {

constexpr double half_log_2pi = 0.91893853320467274178;

void check_batch(const Batch& batch, Task task) {
    if (batch.size() == 0) {
        throw DataError("empty batch");
    }
    if (task == Task::regression) {
        if (batch.y.numel() == 0 || batch.y.rows() != batch.x.rows()) {
            throw DataError("regression batch needs one target row per input row");
        }
    } else {
        if (batch.labels.size() != batch.x.rows()) {
            throw DataError("classification batch needs one label per input row");
        }
    }
}

void check_sampling(std::size_t m, std::size_t n_total, int n_samples) {
    if (m > n_total) {
        throw UsageError("mini-batch size " + std::to_string(m) + " exceeds dataset size " +
                         std::to_string(n_total));
    }
    if (n_samples < 1) {
        throw UsageError("need at least one Monte Carlo sample");
    }
}

}  // namespace

const char* task_name(Task t) { return t == Task::regression ? "regression" : "classification"; }

Task parse_task(const std::string& name) {
    if (name == "regression") return Task::regression;
    if (name == "classification") return Task::classification;
    throw UsageError("unknown task '" + name + "' (expected regression|classification)");
}

Tensor VariationalState::sigma() const {
    Tensor s = Tensor::zeros(rho.shape());
    kernels::softplus_v(rho.data(), s.data(), s.numel());
    return s;
}

VariationalState init_variational(const NetworkSpec& spec, double tau_eps, Rng& rng) {
    spec.validate();
    const std::size_t n = spec.param_count();
    VariationalState vs;
    vs.mu = Tensor::zeros({n});
    vs.rho = Tensor::full({n}, kernels::softplus_inv(0.05));
    vs.tau_eps = tau_eps;
    for (std::size_t layer = 0; layer < spec.depth(); ++layer) {
        const auto blk = spec.layer_block(layer);
        const double stddev = 1.0 / std::sqrt(static_cast<double>(blk.rows));
        for (std::size_t i = 0; i < blk.rows * blk.cols; ++i) {
            vs.mu[blk.offset + i] = stddev * rng.normal();
        }
    }
    return vs;
}

Tensor ElboGradients::concatenated() const {
    std::vector<double> out;
    out.reserve(g_mu.numel() + g_rho.numel());
    out.insert(out.end(), g_mu.data(), g_mu.data() + g_mu.numel());
    out.insert(out.end(), g_rho.data(), g_rho.data() + g_rho.numel());
    return Tensor::row(std::move(out));
}

Var sample_weights(Tape& tape, const VariationalState& vs, const Tensor& eps, Var* mu_var,
                   Var* rho_var) {
    if (eps.numel() != vs.mu.numel()) {
        throw ShapeError("sample_weights: noise length " + std::to_string(eps.numel()) +
                         " != parameter count " + std::to_string(vs.mu.numel()));
    }
    Var mu = tape.leaf(vs.mu);
    Var rho = tape.leaf(vs.rho);
    Var sigma = tape.softplus(rho);
    Var omega = tape.add(mu, tape.mul(sigma, tape.leaf(eps)));
    if (mu_var != nullptr) *mu_var = mu;
    if (rho_var != nullptr) *rho_var = rho;
    return omega;
}

Tensor sample_weights_value(const VariationalState& vs, const Tensor& eps) {
    if (eps.numel() != vs.mu.numel()) {
        throw ShapeError("sample_weights: noise length " + std::to_string(eps.numel()) +
                         " != parameter count " + std::to_string(vs.mu.numel()));
    }
    Tensor omega = vs.sigma();
    const auto& K = kernels::ops();
    K.mul(omega.data(), eps.data(), omega.data(), omega.numel());
    K.add(omega.data(), vs.mu.data(), omega.data(), omega.numel());
    return omega;
}

Var log_q(Tape& tape, Var mu, Var rho, Var omega) {
    const std::size_t d = tape.value(omega).numel();
    if (tape.value(mu).numel() != d || tape.value(rho).numel() != d) {
        throw ShapeError("log_q: mu/rho/omega lengths disagree");
    }
    Var sigma = tape.softplus(rho);
    Var centered = tape.sub(omega, mu);
    Var quad = tape.div(tape.square(centered), tape.square(sigma));
    Var total = tape.scale(tape.sum(quad), -0.5);
    total = tape.add(total, tape.scale(tape.sum(tape.ln(sigma)), -1.0));
    return tape.add_const(total, -static_cast<double>(d) * half_log_2pi);
}

double log_q_value(const VariationalState& vs, const Tensor& omega) {
    if (omega.numel() != vs.mu.numel()) {
        throw ShapeError("log_q: omega length " + std::to_string(omega.numel()) +
                         " != parameter count " + std::to_string(vs.mu.numel()));
    }
    const Tensor sigma = vs.sigma();
    double total = -static_cast<double>(omega.numel()) * half_log_2pi;
    for (std::size_t i = 0; i < omega.numel(); ++i) {
        const double z = (omega[i] - vs.mu[i]) / sigma[i];
        total += -std::log(sigma[i]) - 0.5 * z * z;
    }
    return total;
}

Var log_likelihood(Tape& tape, const NetworkSpec& spec, Var params, const Batch& batch,
                   double tau_eps, Task task) {
    check_batch(batch, task);
    if (task == Task::regression) {
        if (!(tau_eps > 0.0)) {
            throw UsageError("regression likelihood needs a positive noise precision");
        }
        Var yhat = network_forward(tape, spec, params, batch.x);
        Var resid = tape.sub(tape.leaf(batch.y), yhat);
        Var ss = tape.sum(tape.square(resid));
        const double m = static_cast<double>(batch.size());
        const double n_out = static_cast<double>(spec.output_dim());
        const double norm = m * n_out * 0.5 * std::log(tau_eps / (2.0 * std::numbers::pi));
        return tape.add_const(tape.scale(ss, -0.5 * tau_eps), norm);
    }
    Var logits = network_forward(tape, spec, params, batch.x, /*skip_terminal_softmax=*/true);
    Var picked = tape.pick_rows(tape.log_softmax_rows(logits), batch.labels);
    return tape.sum(picked);
}

double log_likelihood_value(const NetworkSpec& spec, const Tensor& params, const Batch& batch,
                            double tau_eps, Task task) {
    Tape tape;
    Var p = tape.leaf(params);
    return tape.value(log_likelihood(tape, spec, p, batch, tau_eps, task)).value();
}

namespace {

struct BuiltElbo {
    Var objective;  // mean over samples of (N/M) ll + log prior - log q
    Var mu;
    Var rho;
    ElboEstimate estimate;
};

BuiltElbo build_elbo(Tape& tape, const NetworkSpec& spec, const VariationalState& vs,
                     const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                     std::span<const Tensor> eps) {
    check_batch(batch, batch.labels.empty() ? Task::regression : Task::classification);
    check_sampling(batch.size(), n_total, static_cast<int>(eps.size()));
    const Task task = batch.labels.empty() ? Task::regression : Task::classification;
    const double scale_n = static_cast<double>(n_total) / static_cast<double>(batch.size());
    const int s_count = static_cast<int>(eps.size());

    BuiltElbo built;
    Var mu = tape.leaf(vs.mu);
    Var rho = tape.leaf(vs.rho);
    Var sigma = tape.softplus(rho);

    Var total;
    double data_acc = 0.0;
    double kl_acc = 0.0;
    for (int s = 0; s < s_count; ++s) {
        Var omega = tape.add(mu, tape.mul(sigma, tape.leaf(eps[s])));
        Var ll = tape.scale(log_likelihood(tape, spec, omega, batch, vs.tau_eps, task), scale_n);
        Var lp = log_prior(tape, prior, omega);
        Var lq = log_q(tape, mu, rho, omega);
        Var sample_obj = tape.sub(tape.add(ll, lp), lq);
        total = s == 0 ? sample_obj : tape.add(total, sample_obj);
        data_acc += tape.value(ll).value();
        kl_acc += tape.value(lq).value() - tape.value(lp).value();
    }
    built.objective = tape.scale(total, 1.0 / static_cast<double>(s_count));
    built.mu = mu;
    built.rho = rho;
    built.estimate.data_term = data_acc / static_cast<double>(s_count);
    built.estimate.kl_term = kl_acc / static_cast<double>(s_count);
    built.estimate.elbo = built.estimate.data_term - built.estimate.kl_term;
    built.estimate.samples_used = s_count;
    return built;
}

std::vector<Tensor> draw_eps(const VariationalState& vs, int n_samples, Rng& rng) {
    std::vector<Tensor> eps;
    eps.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        eps.push_back(rng.normal_tensor({vs.size()}));
    }
    return eps;
}

}  // namespace

ElboEstimate elbo_minibatch_eps(const NetworkSpec& spec, const VariationalState& vs,
                                const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                                std::span<const Tensor> eps) {
    Tape tape;
    return build_elbo(tape, spec, vs, prior, batch, n_total, eps).estimate;
}

ElboEstimate elbo_minibatch(const NetworkSpec& spec, const VariationalState& vs,
                            const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                            int n_samples, Rng& rng) {
    check_sampling(batch.size(), n_total, n_samples);
    const auto eps = draw_eps(vs, n_samples, rng);
    return elbo_minibatch_eps(spec, vs, prior, batch, n_total, eps);
}

ElboGradients elbo_grad_pathwise_eps(const NetworkSpec& spec, const VariationalState& vs,
                                     const PriorSpec& prior, const Batch& batch,
                                     std::size_t n_total, std::span<const Tensor> eps) {
    Tape tape;
    BuiltElbo built = build_elbo(tape, spec, vs, prior, batch, n_total, eps);
    GradientMap gm = tape.backward(built.objective);
    ElboGradients out;
    out.g_mu = gm.grad(built.mu);
    out.g_rho = gm.grad(built.rho);
    out.estimate = built.estimate;
    return out;
}

ElboGradients elbo_grad_pathwise(const NetworkSpec& spec, const VariationalState& vs,
                                 const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                                 int n_samples, Rng& rng) {
    check_sampling(batch.size(), n_total, n_samples);
    const auto eps = draw_eps(vs, n_samples, rng);
    return elbo_grad_pathwise_eps(spec, vs, prior, batch, n_total, eps);
}

ElboGradients elbo_grad_score(const NetworkSpec& spec, const VariationalState& vs,
                              const PriorSpec& prior, const Batch& batch, std::size_t n_total,
                              int n_samples, Rng& rng) {
    const Task task = batch.labels.empty() ? Task::regression : Task::classification;
    check_batch(batch, task);
    check_sampling(batch.size(), n_total, n_samples);
    const double scale_n = static_cast<double>(n_total) / static_cast<double>(batch.size());

    ElboGradients out;
    out.g_mu = Tensor::zeros(vs.mu.shape());
    out.g_rho = Tensor::zeros(vs.rho.shape());
    const auto& K = kernels::ops();
    double data_acc = 0.0;
    double kl_acc = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const Tensor eps = rng.normal_tensor({vs.size()});
        const Tensor omega = sample_weights_value(vs, eps);
        const double ll = scale_n * log_likelihood_value(spec, omega, batch, vs.tau_eps, task);
        const double lp = log_prior_value(prior, omega);
        const double lq = log_q_value(vs, omega);
        const double advantage = ll + lp - lq;

        // grad_xi log q(omega) with omega held constant
        Tape tape;
        Var mu = tape.leaf(vs.mu);
        Var rho = tape.leaf(vs.rho);
        Var lq_var = log_q(tape, mu, rho, tape.leaf(omega));
        GradientMap gm = tape.backward(lq_var);
        const Tensor glq_mu = gm.grad(mu);
        const Tensor glq_rho = gm.grad(rho);
        K.acc_muls(out.g_mu.data(), glq_mu.data(), advantage - 1.0, glq_mu.numel());
        K.acc_muls(out.g_rho.data(), glq_rho.data(), advantage - 1.0, glq_rho.numel());
        data_acc += ll;
        kl_acc += lq - lp;
    }
    const double inv_s = 1.0 / static_cast<double>(n_samples);
    K.muls(out.g_mu.data(), inv_s, out.g_mu.data(), out.g_mu.numel());
    K.muls(out.g_rho.data(), inv_s, out.g_rho.data(), out.g_rho.numel());
    out.estimate.data_term = data_acc * inv_s;
    out.estimate.kl_term = kl_acc * inv_s;
    out.estimate.elbo = out.estimate.data_term - out.estimate.kl_term;
    out.estimate.samples_used = n_samples;
    return out;
}

}  // namespace bdl
