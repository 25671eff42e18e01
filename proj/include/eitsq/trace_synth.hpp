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

// Monte Carlo synthesis of homodyne records with a prescribed noise
// spectrum, and the detector imperfection model.
//
// Synthesis is done in the frequency domain: every bin gets an independent
// circular complex Gaussian coefficient (real at DC and Nyquist) whose
// variance follows the target spectrum, and one inverse real FFT produces
// the record. A flat target of 0.25 gives white samples of variance 0.25.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "eitsq/eit_medium.hpp"
#include "eitsq/error.hpp"
#include "eitsq/fft.hpp"
#include "eitsq/gaussian_optics.hpp"
#include "eitsq/noise_spectrum.hpp"
#include "eitsq/rng.hpp"

namespace eitsq {

struct SeedInfo {
    std::uint64_t master_seed = 0;
    std::uint64_t record_index = 0;
};

/// Sampled quadrature record in shot-noise units (vacuum variance 0.25).
/// Samples are 32-bit, the precision of the raw trace file format.
struct HomodyneTrace {
    std::vector<float> samples;
    double sample_rate = 0.0;
    std::uint64_t record_id = 0;
    SeedInfo seed_info;

    void validate() const {
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
            fail(ErrorKind::invalid_argument, "trace sample rate must be > 0");
        }
        if (samples.empty()) {
            fail(ErrorKind::invalid_argument, "trace has no samples");
        }
        for (float s : samples) {
            if (!std::isfinite(s)) {
                fail(ErrorKind::invalid_argument, "trace has non-finite samples");
            }
        }
    }
};

class RecordSynthesizer {
   public:
    /// `target` is an absolute spectrum covering [0, sample_rate / 2]; it is
    /// interpolated linearly onto the n_samples synthesis bins. An optional
    /// phase profile rotates each positive-frequency coefficient by phi(f).
    RecordSynthesizer(const NoiseSpectrum &target, double sample_rate, std::size_t n_samples,
                      const SidebandPhaseProfile &phase = {})
        : sample_rate_(sample_rate), n_(n_samples) {
        if (!is_power_of_two(n_samples) || n_samples < 4) {
            fail(ErrorKind::invalid_argument, "record length must be a power of two >= 4");
        }
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
            fail(ErrorKind::invalid_argument, "sample rate must be > 0");
        }
        if (target.scale != SpectrumScale::absolute || target.size() == 0) {
            fail(ErrorKind::invalid_argument, "synthesis target must be a non-empty absolute spectrum");
        }
        for (double p : target.power) {
            if (!(p > 0.0) || !std::isfinite(p)) {
                fail(ErrorKind::invalid_argument, "synthesis target must be strictly positive");
            }
        }
        const double nyquist = 0.5 * sample_rate;
        const double bin = sample_rate / static_cast<double>(n_samples);
        if (target.freqs.front() > 0.5 * bin || target.freqs.back() < nyquist - 0.5 * bin) {
            fail(ErrorKind::invalid_argument, "synthesis target does not cover [0, sample_rate / 2]");
        }

        const std::size_t bins = n_ / 2 + 1;
        const double n = static_cast<double>(n_);
        scale_.resize(bins);
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * bin;
            const double level = interpolate_clamped(target.freqs, target.power, f);
            // E|X_k|^2 = n * level; split evenly over real and imaginary parts
            // except at DC and Nyquist, where the coefficient is real.
            const bool real_bin = k == 0 || k == bins - 1;
            scale_[k] = std::sqrt(n * level / (real_bin ? 1.0 : 2.0)) / n;
        }
        if (phase) {
            rotation_.resize(bins, std::complex<double>(1.0, 0.0));
            for (std::size_t k = 1; k + 1 < bins; ++k) {
                rotation_[k] = std::polar(1.0, phase(static_cast<double>(k) * bin));
            }
        }
        fft_ = RealFft::get(n_);
    }

    std::size_t size() const noexcept {
        return n_;
    }
    double sample_rate() const noexcept {
        return sample_rate_;
    }

    /// Deterministic in (seed, record_index).
    HomodyneTrace synthesize(std::uint64_t seed, std::uint64_t record_index) const {
        auto engine = record_engine(seed, record_index);
        std::normal_distribution<double> normal(0.0, 1.0);
        const std::size_t bins = n_ / 2 + 1;
        std::vector<std::complex<double>> coeffs(bins);
        coeffs[0] = {scale_[0] * normal(engine), 0.0};
        for (std::size_t k = 1; k + 1 < bins; ++k) {
            const double re = normal(engine);
            const double im = normal(engine);
            coeffs[k] = scale_[k] * std::complex<double>(re, im);
            if (!rotation_.empty()) {
                coeffs[k] *= rotation_[k];
            }
        }
        coeffs[bins - 1] = {scale_[bins - 1] * normal(engine), 0.0};

        std::vector<double> buffer(n_);
        fft_->inverse(coeffs, buffer);

        HomodyneTrace trace;
        trace.sample_rate = sample_rate_;
        trace.record_id = record_index;
        trace.seed_info = {seed, record_index};
        trace.samples.assign(buffer.begin(), buffer.end());
        return trace;
    }

   private:
    double sample_rate_;
    std::size_t n_;
    std::vector<double> scale_;
    std::vector<std::complex<double>> rotation_;
    std::shared_ptr<const RealFft> fft_;
};

inline NoiseSpectrum flat_spectrum(double level, double sample_rate) {
    return NoiseSpectrum{{0.0, 0.5 * sample_rate}, {level, level}, SpectrumScale::absolute};
}

inline HomodyneTrace synthesize_record(const NoiseSpectrum &target, double sample_rate, std::size_t n_samples,
                                       std::uint64_t master_seed, std::uint64_t record_index) {
    return RecordSynthesizer(target, sample_rate, n_samples).synthesize(master_seed, record_index);
}

/// White record at the vacuum level, the normalization reference.
inline HomodyneTrace shot_noise_record(double sample_rate, std::size_t n_samples, std::uint64_t master_seed,
                                       std::uint64_t record_index) {
    return synthesize_record(flat_spectrum(kShotNoiseVariance, sample_rate), sample_rate, n_samples, master_seed,
                             record_index);
}

/// Keeps the first n samples (ignored when n >= the record length).
inline void truncate(HomodyneTrace &trace, std::size_t n) {
    if (n < trace.samples.size()) {
        trace.samples.resize(n);
    }
}

struct ClassicalSpur {
    double freq_hz = 0.0;
    /// Power of the pickup before common-mode suppression, relative to the
    /// shot-noise variance.
    double power_rel_shot = 0.0;
};

struct DetectorModel {
    double cmrr_db = -58.0;
    std::vector<ClassicalSpur> spurs;
    std::optional<int> quantizer_bits;

    void validate(double sample_rate) const {
        if (!(cmrr_db <= 0.0) || !std::isfinite(cmrr_db)) {
            fail(ErrorKind::invalid_argument, "cmrr_db must be finite and <= 0");
        }
        for (const auto &spur : spurs) {
            if (!(spur.freq_hz >= 0.0) || spur.freq_hz >= 0.5 * sample_rate) {
                fail(ErrorKind::invalid_argument, "spur frequency must lie in [0, sample_rate / 2)");
            }
            if (!(spur.power_rel_shot >= 0.0) || !std::isfinite(spur.power_rel_shot)) {
                fail(ErrorKind::invalid_argument, "spur power must be finite and >= 0");
            }
        }
        if (quantizer_bits && (*quantizer_bits < 2 || *quantizer_bits > 16)) {
            fail(ErrorKind::invalid_argument, "quantizer_bits must lie in [2, 16]");
        }
    }

    bool is_identity() const noexcept {
        return spurs.empty() && !quantizer_bits;
    }
};

/// Variance of a spur's residual sinusoid after suppression.
inline double residual_spur_variance(const ClassicalSpur &spur, double cmrr_db) {
    return spur.power_rel_shot * std::pow(10.0, cmrr_db / 10.0) * kShotNoiseVariance;
}

/// Adds the suppressed classical pickup and optionally quantizes. Full scale
/// of the quantizer is +/- 8 shot-noise standard deviations.
inline HomodyneTrace apply_detector(HomodyneTrace trace, const DetectorModel &model) {
    model.validate(trace.sample_rate);
    if (model.is_identity()) {
        return trace;
    }
    std::vector<double> x(trace.samples.begin(), trace.samples.end());
    if (!model.spurs.empty()) {
        auto engine = record_engine(derive_seed(trace.seed_info.master_seed, Stream::spur_phase),
                                    trace.seed_info.record_index);
        std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
        for (const auto &spur : model.spurs) {
            const double amplitude = std::sqrt(2.0 * residual_spur_variance(spur, model.cmrr_db));
            const double phase = uniform(engine);
            const double w = 2.0 * std::numbers::pi * spur.freq_hz / trace.sample_rate;
            for (std::size_t n = 0; n < x.size(); ++n) {
                x[n] += amplitude * std::cos(w * static_cast<double>(n) + phase);
            }
        }
    }
    if (model.quantizer_bits) {
        const double full_scale = 8.0 * std::sqrt(kShotNoiseVariance);
        const double levels = std::ldexp(1.0, *model.quantizer_bits);
        const double step = 2.0 * full_scale / levels;
        const double lo = -0.5 * levels;
        const double hi = 0.5 * levels - 1.0;
        for (double &v : x) {
            v = step * std::clamp(std::round(v / step), lo, hi);
        }
    }
    trace.samples.assign(x.begin(), x.end());
    return trace;
}

}  // namespace eitsq
