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

#include <cstdlib>
#include <cstring>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"

namespace bdl::kernels {

namespace {

bool detect_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

struct Dispatch {
    Backend backend;
    const Ops* table;

    Dispatch() {
        backend = detect_avx2() ? Backend::avx2 : Backend::scalar;
        if (const char* env = std::getenv("BDL_KERNEL_BACKEND")) {
            if (std::strcmp(env, "scalar") == 0) {
                backend = Backend::scalar;
            } else if (std::strcmp(env, "avx2") == 0) {
                if (!detect_avx2()) {
                    throw NumericError("BDL_KERNEL_BACKEND=avx2 requested but CPU lacks AVX2");
                }
                backend = Backend::avx2;
            } else {
                throw UsageError(std::string("unknown BDL_KERNEL_BACKEND value: ") + env);
            }
        }
        table = backend == Backend::avx2 ? &avx2_ops() : &scalar_ops();
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

const Ops& ops() { return *dispatch().table; }

Backend active_backend() { return dispatch().backend; }

const char* backend_name() {
    return dispatch().backend == Backend::avx2 ? "avx2" : "scalar";
}

bool avx2_supported() { return detect_avx2(); }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !detect_avx2()) {
        throw NumericError("cannot force avx2 backend: CPU lacks AVX2");
    }
    dispatch().backend = b;
    dispatch().table = b == Backend::avx2 ? &avx2_ops() : &scalar_ops();
}

}  // namespace bdl::kernels
