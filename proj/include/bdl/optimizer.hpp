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

#ifndef BDL_OPTIMIZER_HPP
#define BDL_OPTIMIZER_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "bdl/variational.hpp"

namespace bdl {

/// Adam with bias correction.  Parameters are descended on a loss, so the
/// variational loop feeds it the negative ELBO gradient.
struct AdamState {
    Tensor m;  // first-moment estimate
    Tensor v;  // second-moment estimate, entrywise >= 0
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8);
};

/// One update: advances the moment estimates and returns the parameter
/// delta  -lr * m_hat / (sqrt(v_hat) + eps).
Tensor adam_step(AdamState& state, const Tensor& grad, double lr);

/// Step-decay schedule eta0 * factor^floor(epoch / interval); interval 0
/// means a constant rate.
struct LrSchedule {
    double eta0 = 0.001;
    double factor = 1.0;
    int interval = 0;
};

double lr_at(const LrSchedule& schedule, int epoch);

struct TrainConfig {
    int epochs = 1000;
    std::size_t batch = 30;
    int mc_samples = 1;
    LrSchedule lr;
    std::uint64_t seed = 0;
    Task task = Task::regression;
    double tau_eps = 1.0;
    // Re-estimate tau_eps each epoch from the fit at the posterior mean
    // (regression only); warmup epochs keep the configured value.
    bool tau_refresh = false;
    int tau_refresh_warmup = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate(std::size_t n_data) const;
};

struct TraceRow {
    int epoch = 0;
    double elbo = 0.0;
    double data_term = 0.0;
    double kl_term = 0.0;
    double lr = 0.0;
};

/// Training data in tensor form (targets or labels depending on task).
struct TrainData {
    Tensor x;
    Tensor y;
    std::vector<int> labels;

    std::size_t size() const { return x.rows(); }
    Batch gather(const std::vector<std::size_t>& order, std::size_t begin,
                 std::size_t end) const;
};

struct DeterministicResult {
    Tensor weights;
    // 1 / mean squared scalar residual over the training set; +infinity when
    // the fit is exact, with the flag set.
    double tau_mle = 0.0;
    bool tau_is_infinite = false;
    std::vector<TraceRow> trace;  // elbo column holds -loss for the trace CSV
};

/// Point-estimate baseline: mini-batch Adam on the summed squared error,
/// regression only.
DeterministicResult train_deterministic(const NetworkSpec& spec, const TrainData& data,
                                        const TrainConfig& config, Rng& rng);

struct VariationalResult {
    VariationalState state;
    std::vector<TraceRow> trace;
};

/// Mean-field training loop: per epoch, shuffle, sweep mini-batches with
/// pathwise ELBO gradients and one shared Adam state over (mu, rho).
/// Runs for exactly the configured epoch budget.
VariationalResult train_variational(const NetworkSpec& spec, const TrainData& data,
                                    const TrainConfig& config, const PriorSpec& prior, Rng& rng);

}  // namespace bdl

#endif  // BDL_OPTIMIZER_HPP
