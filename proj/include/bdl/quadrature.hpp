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

#ifndef BDL_QUADRATURE_HPP
#define BDL_QUADRATURE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace bdl {

/// Gauss-Legendre rule on (-1, 1); nodes and weights computed by Newton
/// iteration on the Legendre recurrence and cached per order.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussLegendreRule& gauss_legendre(std::size_t order);

/// One Gauss-Legendre panel of the given order over [a, b].
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t order);

}  // namespace bdl

#endif  // BDL_QUADRATURE_HPP
