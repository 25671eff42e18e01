// Copyright 2026 The eitsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Thin RAII layer over FFTW for fixed-length real transforms.
//
// Plans are created once per length under a global lock (the FFTW planner
// is not re-entrant) with FFTW_ESTIMATE | FFTW_UNALIGNED, so the same plan is
// valid for any buffer and the arithmetic does not depend on buffer
// alignment. Executing a plan through the new-array interface is
// thread-safe.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include <fftw3.h>

#include "eitsq/error.hpp"

namespace eitsq {

class RealFft {
   public:
    /// Shared instance for length n.
    static std::shared_ptr<const RealFft> get(std::size_t n) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        static std::map<std::size_t, std::shared_ptr<const RealFft>> cache;
        auto &slot = cache[n];
        if (!slot) {
            slot = std::shared_ptr<const RealFft>(new RealFft(n));
        }
        return slot;
    }

    RealFft(const RealFft &) = delete;
    RealFft &operator=(const RealFft &) = delete;

    ~RealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    std::size_t size() const noexcept {
        return n_;
    }

    /// Unnormalized forward transform; `out` holds n/2 + 1 bins.
    void forward(std::span<double> in, std::span<std::complex<double>> out) const {
        check(in.size() == n_ && out.size() == n_ / 2 + 1);
        fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex *>(out.data()));
    }

    /// Unnormalized inverse transform. Destroys `in`.
    void inverse(std::span<std::complex<double>> in, std::span<double> out) const {
        check(in.size() == n_ / 2 + 1 && out.size() == n_);
        fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex *>(in.data()), out.data());
    }

   private:
    explicit RealFft(std::size_t n) : n_(n) {
        if (n < 2) {
            fail(ErrorKind::invalid_argument, "FFT length must be >= 2");
        }
        const int len = static_cast<int>(n);
        double *real = fftw_alloc_real(n);
        fftw_complex *cplx = fftw_alloc_complex(n / 2 + 1);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_r2c_1d(len, real, cplx, flags);
        inverse_ = fftw_plan_dft_c2r_1d(len, cplx, real, flags);
        fftw_free(real);
        fftw_free(cplx);
        if (forward_ == nullptr || inverse_ == nullptr) {
            fail(ErrorKind::invalid_argument, "FFTW could not plan a transform of length " + std::to_string(n));
        }
    }

    static std::mutex &planner_mutex() {
        static std::mutex m;
        return m;
    }

    static void check(bool ok) {
        if (!ok) {
            fail(ErrorKind::invalid_argument, "FFT buffer size mismatch");
        }
    }

    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

inline bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

}  // namespace eitsq
