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

#include "bdl/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"

namespace bdl {

AdamState::AdamState(std::size_t n, double b1, double b2, double e)
    : m(Tensor::zeros({n})), v(Tensor::zeros({n})), beta1(b1), beta2(b2), eps(e) {
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
        throw UsageError("adam decay rates must lie in (0, 1)");
    }
    if (!(eps > 0.0)) {
        throw UsageError("adam epsilon must be positive");
    }
}

Tensor adam_step(AdamState& state, const Tensor& grad, double lr) {
    if (grad.numel() != state.m.numel()) {
        throw ShapeError("adam_step: gradient length " + std::to_string(grad.numel()) +
                         " != state length " + std::to_string(state.m.numel()));
    }
    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    Tensor delta = Tensor::zeros(grad.shape());
    for (std::size_t i = 0; i < grad.numel(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        delta[i] = -lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    return delta;
}

double lr_at(const LrSchedule& schedule, int epoch) {
    if (epoch < 0) {
        throw UsageError("epoch must be non-negative");
    }
    if (schedule.interval <= 0 || schedule.factor == 1.0) {
        return schedule.eta0;
    }
    return schedule.eta0 * std::pow(schedule.factor, epoch / schedule.interval);
}

void TrainConfig::validate(std::size_t n_data) const {
    if (epochs < 0) {
        throw UsageError("epochs must be non-negative");
    }
    if (batch < 1 || batch > n_data) {
        throw UsageError("batch size " + std::to_string(batch) + " must lie in [1, " +
                         std::to_string(n_data) + "]");
    }
    if (mc_samples < 1) {
        throw UsageError("mc samples must be at least 1");
    }
    if (task == Task::regression && !(tau_eps > 0.0)) {
        throw UsageError("tau_eps must be positive for regression");
    }
}

Batch TrainData::gather(const std::vector<std::size_t>& order, std::size_t begin,
                        std::size_t end) const {
    const std::size_t m = end - begin;
    const std::size_t d = x.cols();
    Batch batch;
    batch.x = Tensor::zeros({m, d});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t src = order[begin + i];
        for (std::size_t j = 0; j < d; ++j) {
            batch.x.at(i, j) = x.at(src, j);
        }
    }
    if (labels.empty()) {
        const std::size_t q = y.cols();
        batch.y = Tensor::zeros({m, q});
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t src = order[begin + i];
            for (std::size_t j = 0; j < q; ++j) {
                batch.y.at(i, j) = y.at(src, j);
            }
        }
    } else {
        batch.labels.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            batch.labels[i] = labels[order[begin + i]];
        }
    }
    return batch;
}

namespace {

double mean_sq_residual(const NetworkSpec& spec, const Tensor& weights, const TrainData& data) {
    const Tensor yhat = network_eval(spec, weights, data.x);
    double ss = 0.0;
    for (std::size_t i = 0; i < yhat.numel(); ++i) {
        const double r = data.y[i] - yhat[i];
        ss += r * r;
    }
    return ss / static_cast<double>(yhat.numel());
}

}  // namespace

DeterministicResult train_deterministic(const NetworkSpec& spec, const TrainData& data,
                                        const TrainConfig& config, Rng& rng) {
    spec.validate();
    if (config.task != Task::regression) {
        throw UsageError("the deterministic baseline supports regression only");
    }
    if (data.size() == 0) {
        throw DataError("empty training set");
    }
    config.validate(data.size());

    DeterministicResult result;
    // same fan-in scaled init as the variational mean
    VariationalState init = init_variational(spec, 1.0, rng);
    result.weights = init.mu;

    AdamState adam(spec.param_count(), config.adam_beta1, config.adam_beta2, config.adam_eps);
    const auto& K = kernels::ops();
    const std::size_t n = data.size();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config.lr, epoch);
        const auto order = rng.permutation(n);
        double loss_acc = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch) {
            const std::size_t end = std::min(begin + config.batch, n);
            const Batch batch = data.gather(order, begin, end);
            Tape tape;
            Var w = tape.leaf(result.weights);
            Var yhat = network_forward(tape, spec, w, batch.x);
            Var resid = tape.sub(tape.leaf(batch.y), yhat);
            // mean squared scalar residual over the batch
            Var loss = tape.scale(tape.sum(tape.square(resid)),
                                  1.0 / static_cast<double>(tape.value(resid).numel()));
            const double loss_value = tape.value(loss).value();
            if (!std::isfinite(loss_value)) {
                throw NumericError("deterministic training diverged at epoch " +
                                   std::to_string(epoch));
            }
            GradientMap gm = tape.backward(loss);
            const Tensor grad = gm.grad(w);
            const Tensor delta = adam_step(adam, grad, lr);
            K.acc(result.weights.data(), delta.data(), delta.numel());
            loss_acc += loss_value;
            ++batches;
        }
        result.trace.push_back({epoch, -loss_acc / static_cast<double>(batches), 0.0, 0.0, lr});
    }

    const double mse = mean_sq_residual(spec, result.weights, data);
    if (mse == 0.0) {
        result.tau_mle = std::numeric_limits<double>::infinity();
        result.tau_is_infinite = true;
    } else {
        result.tau_mle = 1.0 / mse;
    }
    return result;
}

VariationalResult train_variational(const NetworkSpec& spec, const TrainData& data,
                                    const TrainConfig& config, const PriorSpec& prior, Rng& rng) {
    spec.validate();
    validate_prior(prior);
    if (data.size() == 0) {
        throw DataError("empty training set");
    }
    config.validate(data.size());

    VariationalResult result;
    result.state = init_variational(spec, config.tau_eps, rng);
    VariationalState& vs = result.state;
    const std::size_t n = data.size();
    const std::size_t p = spec.param_count();

    AdamState adam(2 * p, config.adam_beta1, config.adam_beta2, config.adam_eps);
    const auto& K = kernels::ops();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config.lr, epoch);
        const auto order = rng.permutation(n);
        double elbo_acc = 0.0;
        double data_acc = 0.0;
        double kl_acc = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch) {
            const std::size_t end = std::min(begin + config.batch, n);
            const Batch batch = data.gather(order, begin, end);
            ElboGradients grads =
                elbo_grad_pathwise(spec, vs, prior, batch, n, config.mc_samples, rng);
            if (!std::isfinite(grads.estimate.elbo)) {
                throw NumericError("non-finite ELBO at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches));
            }
            // descend the negative ELBO with one Adam state over (mu, rho)
            Tensor grad = grads.concatenated();
            K.muls(grad.data(), -1.0, grad.data(), grad.numel());
            const Tensor delta = adam_step(adam, grad, lr);
            K.acc(vs.mu.data(), delta.data(), p);
            K.acc(vs.rho.data(), delta.data() + p, p);
            elbo_acc += grads.estimate.elbo;
            data_acc += grads.estimate.data_term;
            kl_acc += grads.estimate.kl_term;
            ++batches;
        }
        const double inv_b = 1.0 / static_cast<double>(batches);
        result.trace.push_back(
            {epoch, elbo_acc * inv_b, data_acc * inv_b, kl_acc * inv_b, lr});

        if (config.tau_refresh && config.task == Task::regression &&
            epoch >= config.tau_refresh_warmup) {
            // plug-in fit at the posterior mean
            const double mse = mean_sq_residual(spec, vs.mu, data);
            vs.tau_eps = std::clamp(mse > 0.0 ? 1.0 / mse : 1e8, 1e-6, 1e8);
        }
    }
    return result;
}

}  // namespace bdl
