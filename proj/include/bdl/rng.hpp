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

#ifndef BDL_RNG_HPP
#define BDL_RNG_HPP

#include <cstdint>
#include <vector>

#include "bdl/tensor.hpp"

namespace bdl {

/// Deterministic generator (xoshiro256++ seeded through splitmix64) with
/// explicitly specified distributions, so identical seeds give identical
/// streams on every platform and standard-library version.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; pairs are cached, so draws come in a
    /// fixed order regardless of call grouping.
    double normal();

    void fill_normal(Tensor& t);
    Tensor normal_tensor(std::vector<std::size_t> shape);

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n);

    /// Independent substream for (this seed, stream index) pairs.
    Rng substream(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// Stateless seed mixing for derived streams (benchmark cells, data vs
/// training streams).  Deterministic and order-sensitive.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace bdl

#endif  // BDL_RNG_HPP
