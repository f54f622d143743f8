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

#ifndef BDL_KERNELS_HPP
#define BDL_KERNELS_HPP

#include <cstddef>

// Arithmetic inner loops behind the tensor ops.  Two interchangeable
// backends: a scalar reference and an AVX2 variant, selected once at startup
// from CPU capabilities (override with BDL_KERNEL_BACKEND=scalar|avx2).
//
// Lane-parallel ops (add/sub/mul/div/square/abs/scale and the matmul
// variants with broadcast accumulation order) produce bit-identical results
// across backends; reductions (sum, dot, matmul_nt_acc) use striped partial
// sums under AVX2 and agree with the scalar path to roundoff only.
// Transcendental maps (exp, log, tanh, softplus, sigmoid) share a single
// libm-based loop in both backends.

namespace bdl::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
    // elementwise, tensor-tensor
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    void (*div)(const double* a, const double* b, double* out, std::size_t n);
    // elementwise, tensor-scalar
    void (*adds)(const double* a, double s, double* out, std::size_t n);
    void (*muls)(const double* a, double s, double* out, std::size_t n);
    void (*ssub)(double s, const double* a, double* out, std::size_t n);  // s - a
    void (*sdiv)(double s, const double* a, double* out, std::size_t n);  // s / a
    // elementwise, unary
    void (*square)(const double* a, double* out, std::size_t n);
    void (*abs)(const double* a, double* out, std::size_t n);
    // accumulation (gradient fan-in)
    void (*acc)(double* dst, const double* src, std::size_t n);                   // dst += src
    void (*acc_mul)(double* dst, const double* a, const double* b, std::size_t n);  // dst += a.*b
    void (*acc_muls)(double* dst, const double* a, double s, std::size_t n);        // dst += a*s
    // reductions
    double (*sum)(const double* a, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // matrix products, row major, accumulating into the destination
    // C[m x n] += A[m x k] * B[k x n]
    void (*matmul_nn_acc)(std::size_t m, std::size_t k, std::size_t n, const double* A,
                          const double* B, double* C);
    // D[m x k] += G[m x n] * B'[n x k]   (B stored k x n)
    void (*matmul_nt_acc)(std::size_t m, std::size_t n, std::size_t k, const double* G,
                          const double* B, double* D);
    // D[k x n] += A'[k x m] * G[m x n]   (A stored m x k)
    void (*matmul_tn_acc)(std::size_t m, std::size_t k, std::size_t n, const double* A,
                          const double* G, double* D);
};

/// Active dispatch table.
const Ops& ops();

Backend active_backend();
const char* backend_name();
bool avx2_supported();

/// Test hook; throws NumericError if the backend is unavailable on this CPU.
void force_backend(Backend b);

const Ops& scalar_ops();
const Ops& avx2_ops();  // valid only when avx2_supported()

// Shared transcendental loops (identical in every backend).
void exp_v(const double* a, double* out, std::size_t n);
void log_v(const double* a, double* out, std::size_t n);
void tanh_v(const double* a, double* out, std::size_t n);
void softplus_v(const double* a, double* out, std::size_t n);
void sigmoid_v(const double* a, double* out, std::size_t n);

double softplus(double x);
double softplus_inv(double y);
double sigmoid(double x);

}  // namespace bdl::kernels

#endif  // BDL_KERNELS_HPP
