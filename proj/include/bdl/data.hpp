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

#ifndef BDL_DATA_HPP
#define BDL_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdl/rng.hpp"
#include "bdl/tensor.hpp"

namespace bdl {

/// Per-feature shift/scale record; constant features are flagged and left
/// unscaled.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> constant;

    Tensor apply(const Tensor& x) const;
    Tensor invert(const Tensor& x) const;
};

struct Dataset {
    Tensor x;                 // N x d0
    Tensor y;                 // N x n_out (regression)
    std::vector<int> labels;  // N entries  (classification)
    std::optional<Standardization> applied;

    std::size_t size() const { return x.rows(); }
    bool classification() const { return !labels.empty(); }
};

/// y = x sin(x) with x ~ Uniform(lo, hi) and additive N(0, sigma^2) noise.
Dataset gen_xsinx(std::size_t n, double sigma, double lo, double hi, std::uint64_t seed);

/// Two interleaving crescents with isotropic Gaussian noise: class 0 on
/// (cos t, sin t), class 1 on (1 - cos t, 1/2 - sin t), t ~ Uniform(0, pi).
Dataset gen_two_moons(std::size_t n, double sigma, std::uint64_t seed);

/// Uniform permutation, then a prefix split of ceil(f N) training rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Shift/scale features to zero mean and unit spread; the record reapplies
/// the identical transform to later inputs.
std::pair<Dataset, Standardization> standardize(const Dataset& ds);

struct CsvSchema {
    std::size_t n_features = 1;
    std::size_t n_targets = 1;   // ignored when classification
    bool classification = false;  // one integer label column after features
};

/// Comma-separated, '.' decimal point, one optional header line (detected
/// by a non-numeric first row).  Errors carry 1-based line numbers.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes features then targets (or the label column) with shortest
/// round-trip formatting, so save/load is lossless.
void save_csv(const std::string& path, const Dataset& ds, bool header = true);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace bdl

#endif  // BDL_DATA_HPP
