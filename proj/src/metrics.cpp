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

#include "bdl/metrics.hpp"

#include <cmath>

#include "bdl/errors.hpp"

namespace bdl {

double r2(const Tensor& y_true, const Tensor& y_pred) {
    require_same_shape(y_true, y_pred, "r2");
    const std::size_t n = y_true.numel();
    if (n == 0) {
        throw DataError("r2: empty inputs");
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += y_true[i];
    }
    mean /= static_cast<double>(n);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y_true[i] - y_pred[i];
        const double c = y_true[i] - mean;
        ss_res += r * r;
        ss_tot += c * c;
    }
    if (ss_tot == 0.0) {
        throw NumericError("r2 is undefined: truth values have zero variance");
    }
    return 1.0 - ss_res / ss_tot;
}

double rmse(const Tensor& y_true, const Tensor& y_pred) {
    require_same_shape(y_true, y_pred, "rmse");
    const std::size_t n = y_true.numel();
    if (n == 0) {
        throw DataError("rmse: empty inputs");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y_true[i] - y_pred[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(n));
}

double accuracy(const std::vector<int>& labels, const Tensor& probabilities) {
    if (probabilities.ndim() != 2 || labels.size() != probabilities.rows()) {
        throw ShapeError("accuracy: need one label per probability row");
    }
    const std::size_t n = labels.size();
    const std::size_t c = probabilities.cols();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = probabilities.data() + i * c;
        double total = 0.0;
        std::size_t best = 0;
        for (std::size_t j = 0; j < c; ++j) {
            total += row[j];
            if (row[j] > row[best]) {
                best = j;  // strict: ties keep the lowest index
            }
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw DataError("accuracy: probability row " + std::to_string(i) +
                            " sums to " + std::to_string(total));
        }
        if (static_cast<int>(best) == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

double coverage(const Tensor& y_true, const std::vector<std::pair<double, double>>& intervals) {
    if (y_true.numel() != intervals.size()) {
        throw ShapeError("coverage: need one interval per truth");
    }
    if (intervals.empty()) {
        throw DataError("coverage: empty inputs");
    }
    std::size_t inside = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (intervals[i].first <= y_true[i] && y_true[i] <= intervals[i].second) {
            ++inside;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

}  // namespace bdl
