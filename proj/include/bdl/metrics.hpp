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

#ifndef BDL_METRICS_HPP
#define BDL_METRICS_HPP

#include <map>
#include <utility>
#include <vector>

#include "bdl/tensor.hpp"

namespace bdl {

struct MetricReport {
    double r2 = 0.0;
    double rmse = 0.0;
    double accuracy = 0.0;
    std::map<double, double> coverage;  // level -> fraction inside interval
};

/// Coefficient of determination on flattened residuals with the pooled
/// mean.  Throws NumericError when the truth has zero variance.
double r2(const Tensor& y_true, const Tensor& y_pred);

/// Root mean squared residual over all scalar entries.
double rmse(const Tensor& y_true, const Tensor& y_pred);

/// Fraction of rows whose argmax probability (ties to the lowest class
/// index) matches the label; rows must sum to 1 within 1e-9.
double accuracy(const std::vector<int>& labels, const Tensor& probabilities);

/// Fraction of truths with lo <= y <= hi.
double coverage(const Tensor& y_true, const std::vector<std::pair<double, double>>& intervals);

}  // namespace bdl

#endif  // BDL_METRICS_HPP
