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

#ifndef BDL_TENSOR_HPP
#define BDL_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bdl {

/// Dense row-major array of doubles with shape metadata.
///
/// Invariant: data().size() == product of shape() at all times.  Tensors are
/// plain values; once handed to a tape or another thread they are treated as
/// immutable.
class Tensor {
  public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    /// 1-D tensor from values.
    static Tensor row(std::vector<double> values);
    /// 2-D tensor from nested initializer lists (row major).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    /// Row/column accessors for 2-D tensors (1-D counts as a single row).
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> span() { return {data_.data(), data_.size()}; }
    std::span<const double> span() const { return {data_.data(), data_.size()}; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    /// Scalar value; throws unless numel() == 1.
    double value() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// Shape rendered as "2x3" for error messages.
    std::string shape_str() const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace bdl

#endif  // BDL_TENSOR_HPP
