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

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eitsq/error.hpp"

namespace eitsq {

enum class SpectrumScale { absolute, db_rel_shot };

inline std::string_view to_string(SpectrumScale scale) {
    return scale == SpectrumScale::absolute ? "absolute" : "db_rel_shot";
}

inline SpectrumScale parse_scale(std::string_view text) {
    if (text == "absolute") {
        return SpectrumScale::absolute;
    }
    if (text == "db_rel_shot") {
        return SpectrumScale::db_rel_shot;
    }
    fail(ErrorKind::format, "unknown spectrum scale '" + std::string(text) + "'");
}

/// Quadrature-noise power on a frequency grid. Absolute power is the
/// variance per bin in shot-noise units (white noise of variance v sits at
/// level v; the vacuum sits at 0.25).
struct NoiseSpectrum {
    std::vector<double> freqs;
    std::vector<double> power;
    SpectrumScale scale = SpectrumScale::absolute;

    std::size_t size() const noexcept {
        return freqs.size();
    }

    void validate() const {
        if (freqs.size() != power.size()) {
            fail(ErrorKind::invalid_argument, "spectrum frequency and power arrays differ in length");
        }
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            if (!std::isfinite(freqs[i]) || freqs[i] < 0.0 || (i > 0 && freqs[i] <= freqs[i - 1])) {
                fail(ErrorKind::invalid_argument, "spectrum frequencies must be finite, >= 0 and strictly increasing");
            }
            if (!std::isfinite(power[i]) || (scale == SpectrumScale::absolute && power[i] <= 0.0)) {
                fail(ErrorKind::invalid_argument, "absolute spectrum power must be finite and > 0");
            }
        }
    }
};

/// Frequencies k * sample_rate / nfft for k = 0 .. nfft / 2.
inline std::vector<double> fft_grid(double sample_rate, std::size_t nfft) {
    std::vector<double> freqs(nfft / 2 + 1);
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
    }
    return freqs;
}

/// Linear interpolation, clamped to the end values outside the grid.
inline double interpolate_clamped(const std::vector<double> &x, const std::vector<double> &y, double at) {
    if (at <= x.front()) {
        return y.front();
    }
    if (at >= x.back()) {
        return y.back();
    }
    std::size_t lo = 0;
    std::size_t hi = x.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (x[mid] <= at) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (at == x[lo]) {
        return y[lo];
    }
    const double frac = (at - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + frac * (y[hi] - y[lo]);
}

}  // namespace eitsq
