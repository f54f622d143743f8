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

// Scalar reference kernels.  These define the semantics the AVX2 variants
// are tested against; keep the loop orders here boring and explicit.

#include <cmath>
#include <cstddef>

#include "bdl/kernels.hpp"

namespace bdl::kernels {

namespace {

void s_add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_div(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}

void s_adds(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s;
}

void s_muls(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void s_ssub(double s, const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s - a[i];
}

void s_sdiv(double s, const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s / a[i];
}

void s_square(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * a[i];
}

void s_abs(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(a[i]);
}

void s_acc(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void s_acc_mul(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void s_acc_muls(double* dst, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * s;
}

double s_sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double s_dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// C[m x n] += A[m x k] B[k x n]; i-k-j order so every C entry accumulates
// contributions in ascending k, matching the AVX2 variant lane for lane.
void s_matmul_nn_acc(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = arow[p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

// D[m x k] += G[m x n] B'[n x k], i.e. row dot products over n.
void s_matmul_nt_acc(std::size_t m, std::size_t n, std::size_t k, const double* G,
                     const double* B, double* D) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        double* drow = D + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = B + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            drow[p] += acc;
        }
    }
}

// D[k x n] += A'[k x m] G[m x n]; i outer so D rows accumulate in ascending i.
void s_matmul_tn_acc(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* G, double* D) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        const double* grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = arow[p];
            double* drow = D + p * n;
            for (std::size_t j = 0; j < n; ++j) drow[j] += a * grow[j];
        }
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        s_add,  s_sub,  s_mul,     s_div,     s_adds,         s_muls,
        s_ssub, s_sdiv, s_square,  s_abs,     s_acc,          s_acc_mul,
        s_acc_muls,     s_sum,     s_dot,     s_matmul_nn_acc, s_matmul_nt_acc,
        s_matmul_tn_acc,
    };
    return table;
}

void exp_v(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a[i]);
}

void log_v(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(a[i]);
}

void tanh_v(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(a[i]);
}

double softplus(double x) {
    // log(1 + e^x) without overflow on either side.
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

double softplus_inv(double y) { return std::log(std::expm1(y)); }

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void softplus_v(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = softplus(a[i]);
}

void sigmoid_v(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(a[i]);
}

}  // namespace bdl::kernels
