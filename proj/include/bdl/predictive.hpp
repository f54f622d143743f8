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

#ifndef BDL_PREDICTIVE_HPP
#define BDL_PREDICTIVE_HPP

#include <utility>
#include <vector>

#include "bdl/network.hpp"
#include "bdl/rng.hpp"
#include "bdl/variational.hpp"

namespace bdl {

/// Monte Carlo predictive summary at one input point.
struct PredictiveSummary {
    Tensor mean;                                          // n_out
    Tensor variance;                                      // n_out x n_out
    double tau_eps = 0.0;                                 // 0 for classification
    std::vector<double> levels;                           // requested interval levels
    std::vector<std::vector<std::pair<double, double>>> intervals;  // [level][output]
};

/// k forward passes over a whole input block, one independent weight draw
/// per pass.  Result is [k, B, n_out]; deterministic given the rng state.
Tensor predict_samples(const NetworkSpec& spec, const VariationalState& vs, const Tensor& x,
                       int k, Rng& rng);

/// Extract one input point's [k x n_out] sample block.
Tensor sample_block(const Tensor& samples, std::size_t point);

/// Arithmetic mean over draws, per output.
Tensor predictive_mean(const Tensor& samples);

/// (1/k) sum_i [ tau^-1 I + y_i y_i^T ] - ybar ybar^T: observation noise
/// plus the 1/k-normalized sample covariance.  Pass tau_eps <= 0 (or use
/// classification) to drop the noise term.
Tensor predictive_variance(const Tensor& samples, double tau_eps);

/// Empirical central interval at the given level: quantiles (1 +/- level)/2
/// per output, linear interpolation between order statistics.
std::vector<std::pair<double, double>> credible_interval(const Tensor& samples, double level);

/// Full summary for every row of x.
std::vector<PredictiveSummary> predict_summaries(const NetworkSpec& spec,
                                                 const VariationalState& vs, const Tensor& x,
                                                 int k, const std::vector<double>& levels,
                                                 Task task, Rng& rng);

}  // namespace bdl

#endif  // BDL_PREDICTIVE_HPP
