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

#include "bdl/predictive.hpp"

#include <algorithm>
#include <cmath>

#include "bdl/errors.hpp"

namespace bdl {

Tensor predict_samples(const NetworkSpec& spec, const VariationalState& vs, const Tensor& x,
                       int k, Rng& rng) {
    spec.validate();
    if (k < 1) {
        throw UsageError("need at least one predictive draw");
    }
    const std::size_t b = x.rows();
    const std::size_t n_out = spec.output_dim();
    Tensor samples = Tensor::zeros({static_cast<std::size_t>(k), b, n_out});
    for (int draw = 0; draw < k; ++draw) {
        const Tensor eps = rng.normal_tensor({vs.size()});
        const Tensor omega = sample_weights_value(vs, eps);
        const Tensor y = network_eval(spec, omega, x);
        std::copy(y.data(), y.data() + y.numel(),
                  samples.data() + static_cast<std::size_t>(draw) * b * n_out);
    }
    return samples;
}

Tensor sample_block(const Tensor& samples, std::size_t point) {
    if (samples.ndim() != 3) {
        throw ShapeError("sample_block: expected a [k, B, n_out] tensor, got " +
                         samples.shape_str());
    }
    const std::size_t k = samples.shape()[0];
    const std::size_t b = samples.shape()[1];
    const std::size_t n_out = samples.shape()[2];
    if (point >= b) {
        throw ShapeError("sample_block: point index out of range");
    }
    Tensor block = Tensor::zeros({k, n_out});
    for (std::size_t i = 0; i < k; ++i) {
        const double* src = samples.data() + (i * b + point) * n_out;
        std::copy(src, src + n_out, block.data() + i * n_out);
    }
    return block;
}

Tensor predictive_mean(const Tensor& samples) {
    if (samples.ndim() != 2 || samples.rows() == 0) {
        throw ShapeError("predictive_mean: expected a non-empty [k x n_out] block, got " +
                         samples.shape_str());
    }
    const std::size_t k = samples.rows();
    const std::size_t n = samples.cols();
    Tensor mean = Tensor::zeros({n});
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            mean[j] += samples.at(i, j);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        mean[j] /= static_cast<double>(k);
    }
    return mean;
}

Tensor predictive_variance(const Tensor& samples, double tau_eps) {
    if (samples.ndim() != 2 || samples.rows() == 0) {
        throw ShapeError("predictive_variance: expected a non-empty [k x n_out] block, got " +
                         samples.shape_str());
    }
    const std::size_t k = samples.rows();
    const std::size_t n = samples.cols();
    Tensor var = Tensor::zeros({n, n});
    // (1/k) sum of outer products ...
    for (std::size_t i = 0; i < k; ++i) {
        const double* row = samples.data() + i * n;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                var.at(r, c) += row[r] * row[c];
            }
        }
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < n * n; ++i) {
        var[i] *= inv_k;
    }
    // ... plus the noise floor, minus the outer product of the mean
    const double noise = tau_eps > 0.0 ? 1.0 / tau_eps : 0.0;
    const Tensor mean = predictive_mean(samples);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            var.at(r, c) -= mean[r] * mean[c];
        }
        var.at(r, r) += noise;
    }
    return var;
}

std::vector<std::pair<double, double>> credible_interval(const Tensor& samples, double level) {
    if (samples.ndim() != 2) {
        throw ShapeError("credible_interval: expected a [k x n_out] block, got " +
                         samples.shape_str());
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw UsageError("credible level must lie in (0, 1)");
    }
    const std::size_t k = samples.rows();
    if (k < 2) {
        throw UsageError("credible_interval needs at least two draws");
    }
    const std::size_t n = samples.cols();

    auto quantile = [](std::vector<double>& sorted, double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };

    std::vector<std::pair<double, double>> out(n);
    std::vector<double> column(k);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            column[i] = samples.at(i, j);
        }
        std::sort(column.begin(), column.end());
        out[j] = {quantile(column, 0.5 * (1.0 - level)), quantile(column, 0.5 * (1.0 + level))};
    }
    return out;
}

std::vector<PredictiveSummary> predict_summaries(const NetworkSpec& spec,
                                                 const VariationalState& vs, const Tensor& x,
                                                 int k, const std::vector<double>& levels,
                                                 Task task, Rng& rng) {
    const Tensor samples = predict_samples(spec, vs, x, k, rng);
    const std::size_t b = x.rows();
    std::vector<PredictiveSummary> out;
    out.reserve(b);
    const double tau = task == Task::regression ? vs.tau_eps : 0.0;
    for (std::size_t point = 0; point < b; ++point) {
        const Tensor block = sample_block(samples, point);
        PredictiveSummary s;
        s.mean = predictive_mean(block);
        s.variance = predictive_variance(block, tau);
        s.tau_eps = tau;
        s.levels = levels;
        for (double level : levels) {
            if (k >= 2) {
                s.intervals.push_back(credible_interval(block, level));
            } else {
                std::vector<std::pair<double, double>> degenerate;
                for (std::size_t j = 0; j < s.mean.numel(); ++j) {
                    degenerate.emplace_back(s.mean[j], s.mean[j]);
                }
                s.intervals.push_back(std::move(degenerate));
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace bdl
