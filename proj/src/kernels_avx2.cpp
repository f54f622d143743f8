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

// AVX2 kernel variants, 4 doubles per lane.  Multiplies and adds are kept
// unfused (no FMA intrinsics) so lane results match the scalar reference
// bit for bit; only the striped reductions differ by summation order.

#include "bdl/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace bdl::kernels {

namespace {

void v_add(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_div(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] / b[i];
}

void v_adds(const double* a, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vs));
    }
    for (; i < n; ++i) out[i] = a[i] + s;
}

void v_muls(const double* a, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
    }
    for (; i < n; ++i) out[i] = a[i] * s;
}

void v_ssub(double s, const double* a, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(vs, _mm256_loadu_pd(a + i)));
    }
    for (; i < n; ++i) out[i] = s - a[i];
}

void v_sdiv(double s, const double* a, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_div_pd(vs, _mm256_loadu_pd(a + i)));
    }
    for (; i < n; ++i) out[i] = s / a[i];
}

void v_square(const double* a, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, va));
    }
    for (; i < n; ++i) out[i] = a[i] * a[i];
}

void v_abs(const double* a, double* out, std::size_t n) {
    // clear the sign bit
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(a + i)));
    }
    for (; i < n; ++i) out[i] = std::fabs(a[i]);
}

void v_acc(double* dst, const double* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
    }
    for (; i < n; ++i) dst[i] += src[i];
}

void v_acc_mul(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void v_acc_muls(double* dst, const double* a, double s, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), vs);
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += a[i] * s;
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double v_sum(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

double v_dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

void v_matmul_nn_acc(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d va = _mm256_set1_pd(arow[p]);
            const double* brow = B + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(brow + j));
                _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

void v_matmul_nt_acc(std::size_t m, std::size_t n, std::size_t k, const double* G,
                     const double* B, double* D) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        double* drow = D + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = B + p * n;
            __m256d acc = _mm256_setzero_pd();
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(grow + j),
                                                       _mm256_loadu_pd(brow + j)));
            }
            double total = hsum(acc);
            for (; j < n; ++j) total += grow[j] * brow[j];
            drow[p] += total;
        }
    }
}

void v_matmul_tn_acc(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* G, double* D) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        const double* grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d va = _mm256_set1_pd(arow[p]);
            double* drow = D + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(grow + j));
                _mm256_storeu_pd(drow + j, _mm256_add_pd(_mm256_loadu_pd(drow + j), prod));
            }
            for (; j < n; ++j) drow[j] += arow[p] * grow[j];
        }
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops table = {
        v_add,  v_sub,  v_mul,     v_div,     v_adds,          v_muls,
        v_ssub, v_sdiv, v_square,  v_abs,     v_acc,           v_acc_mul,
        v_acc_muls,     v_sum,     v_dot,     v_matmul_nn_acc, v_matmul_nt_acc,
        v_matmul_tn_acc,
    };
    return table;
}

}  // namespace bdl::kernels

#else  // non-x86 build: no AVX2 table, dispatch stays on the scalar path

namespace bdl::kernels {

const Ops& avx2_ops() { return scalar_ops(); }

}  // namespace bdl::kernels

#endif
