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

// Welch averaged periodogram, shot-noise normalization and spectrum
// comparison.
//
// Spectra are variance per bin: each periodogram is |X_k|^2 / sum(w^2), so a
// white record of variance v gives a flat spectrum at level v for every
// window. bin_power() converts to one-sided power per bin, whose sum over
// all bins is the mean square of the record.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eitsq/error.hpp"
#include "eitsq/fft.hpp"
#include "eitsq/gaussian_optics.hpp"
#include "eitsq/noise_spectrum.hpp"
#include "eitsq/parallel.hpp"
#include "eitsq/trace_synth.hpp"

namespace eitsq {

enum class WindowKind { rectangular, hann };

inline std::string_view to_string(WindowKind kind) {
    return kind == WindowKind::hann ? "hann" : "rectangular";
}

inline WindowKind parse_window(std::string_view text) {
    if (text == "hann") {
        return WindowKind::hann;
    }
    if (text == "rectangular") {
        return WindowKind::rectangular;
    }
    fail(ErrorKind::invalid_argument, "unknown window '" + std::string(text) + "'");
}

/// Periodic window of length n.
inline std::vector<double> make_window(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (kind == WindowKind::hann) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
        }
    }
    return w;
}

struct WelchOptions {
    std::size_t nfft = 8192;
    WindowKind window = WindowKind::hann;
    double overlap = 0.5;

    void validate() const {
        if (!is_power_of_two(nfft) || nfft < 4) {
            fail(ErrorKind::invalid_argument, "nfft must be a power of two >= 4");
        }
        if (!(overlap >= 0.0 && overlap <= 0.9)) {
            fail(ErrorKind::invalid_argument, "overlap must lie in [0, 0.9]");
        }
    }

    std::size_t hop() const {
        const auto shared = static_cast<std::size_t>(std::llround(overlap * static_cast<double>(nfft)));
        return std::max<std::size_t>(1, nfft - shared);
    }

    std::size_t segments(std::size_t record_length) const {
        return record_length < nfft ? 0 : (record_length - nfft) / hop() + 1;
    }
};

/// Periodogram sum over the segments of one record.
struct RecordPeriodogram {
    std::vector<double> sum;
    std::size_t segments = 0;
};

class WelchEstimator {
   public:
    WelchEstimator(const WelchOptions &options, double sample_rate)
        : options_(options), sample_rate_(sample_rate) {
        options_.validate();
        if (!(sample_rate > 0.0)) {
            fail(ErrorKind::invalid_argument, "sample rate must be > 0");
        }
        window_ = make_window(options_.window, options_.nfft);
        double energy = 0.0;
        for (double w : window_) {
            energy += w * w;
        }
        norm_ = 1.0 / energy;
        fft_ = RealFft::get(options_.nfft);
    }

    const WelchOptions &options() const noexcept {
        return options_;
    }
    double sample_rate() const noexcept {
        return sample_rate_;
    }

    /// Segments are summed in order, so the result depends only on the samples.
    RecordPeriodogram accumulate(std::span<const float> samples) const {
        const std::size_t nfft = options_.nfft;
        const std::size_t count = options_.segments(samples.size());
        if (count == 0) {
            fail(ErrorKind::invalid_argument, "nfft exceeds the record length");
        }
        RecordPeriodogram out;
        out.sum.assign(nfft / 2 + 1, 0.0);
        out.segments = count;
        std::vector<double> segment(nfft);
        std::vector<std::complex<double>> bins(nfft / 2 + 1);
        for (std::size_t s = 0; s < count; ++s) {
            const std::size_t start = s * options_.hop();
            for (std::size_t i = 0; i < nfft; ++i) {
                segment[i] = window_[i] * static_cast<double>(samples[start + i]);
            }
            fft_->forward(segment, bins);
            for (std::size_t k = 0; k < bins.size(); ++k) {
                out.sum[k] += std::norm(bins[k]) * norm_;
            }
        }
        return out;
    }

    RecordPeriodogram accumulate(const HomodyneTrace &trace) const {
        if (trace.sample_rate != sample_rate_) {
            fail(ErrorKind::invalid_argument, "trace sample rate differs from the estimator's");
        }
        return accumulate(std::span<const float>(trace.samples));
    }

    /// Averages per-record sums with a fixed-order pairwise reduction, so the
    /// result is independent of how the records were scheduled.
    NoiseSpectrum finalize(std::span<const RecordPeriodogram> records) const {
        if (records.empty()) {
            fail(ErrorKind::invalid_argument, "no records to average");
        }
        std::vector<double> total = pairwise_sum(records);
        std::size_t segments = 0;
        for (const auto &r : records) {
            segments += r.segments;
        }
        NoiseSpectrum out;
        out.scale = SpectrumScale::absolute;
        out.freqs = fft_grid(sample_rate_, options_.nfft);
        out.power.resize(total.size());
        for (std::size_t k = 0; k < total.size(); ++k) {
            out.power[k] = total[k] / static_cast<double>(segments);
        }
        return out;
    }

   private:
    static std::vector<double> pairwise_sum(std::span<const RecordPeriodogram> records) {
        if (records.size() == 1) {
            return records.front().sum;
        }
        const std::size_t mid = records.size() / 2;
        std::vector<double> left = pairwise_sum(records.first(mid));
        const std::vector<double> right = pairwise_sum(records.subspan(mid));
        if (left.size() != right.size()) {
            fail(ErrorKind::invalid_argument, "periodograms of different lengths");
        }
        for (std::size_t k = 0; k < left.size(); ++k) {
            left[k] += right[k];
        }
        return left;
    }

    WelchOptions options_;
    double sample_rate_;
    std::vector<double> window_;
    double norm_ = 1.0;
    std::shared_ptr<const RealFft> fft_;
};

/// Averaged periodogram over all segments of all traces.
inline NoiseSpectrum welch_psd(std::span<const HomodyneTrace> traces, const WelchOptions &options,
                               std::size_t workers = 1) {
    if (traces.empty()) {
        fail(ErrorKind::invalid_argument, "welch_psd needs at least one trace");
    }
    const double fs = traces.front().sample_rate;
    for (const auto &t : traces) {
        if (t.sample_rate != fs) {
            fail(ErrorKind::invalid_argument, "traces have mixed sample rates");
        }
        if (t.samples.size() < options.nfft) {
            fail(ErrorKind::invalid_argument, "nfft exceeds the shortest trace");
        }
    }
    const WelchEstimator estimator(options, fs);
    std::vector<RecordPeriodogram> parts(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) { parts[i] = estimator.accumulate(traces[i]); });
    return estimator.finalize(parts);
}

namespace detail {

inline void require_same_grid(const NoiseSpectrum &a, const NoiseSpectrum &b) {
    if (a.size() != b.size() || a.size() == 0) {
        fail(ErrorKind::invalid_argument, "spectra have different frequency grids");
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double tol = 1e-9 * std::max(1.0, std::abs(a.freqs[k]));
        if (std::abs(a.freqs[k] - b.freqs[k]) > tol) {
            fail(ErrorKind::invalid_argument, "spectra have different frequency grids");
        }
    }
}

inline double power_db(const NoiseSpectrum &s, std::size_t k) {
    return s.scale == SpectrumScale::db_rel_shot ? s.power[k] : variance_to_db(s.power[k]);
}

}  // namespace detail

/// 10 log10(measured / reference) per bin.
inline NoiseSpectrum normalize_to_shot(const NoiseSpectrum &measured, const NoiseSpectrum &shot_reference) {
    detail::require_same_grid(measured, shot_reference);
    if (measured.scale != SpectrumScale::absolute || shot_reference.scale != SpectrumScale::absolute) {
        fail(ErrorKind::invalid_argument, "normalize_to_shot expects absolute spectra");
    }
    NoiseSpectrum out;
    out.scale = SpectrumScale::db_rel_shot;
    out.freqs = measured.freqs;
    out.power.resize(measured.size());
    for (std::size_t k = 0; k < measured.size(); ++k) {
        if (!(shot_reference.power[k] > 0.0)) {
            fail(ErrorKind::invalid_argument, "shot reference has a non-positive bin at " +
                                                  std::to_string(shot_reference.freqs[k]) + " Hz");
        }
        out.power[k] = 10.0 * std::log10(measured.power[k] / shot_reference.power[k]);
    }
    return out;
}

/// Absolute spectrum in dB relative to the analytic shot level 0.25.
inline NoiseSpectrum to_db_rel_shot(const NoiseSpectrum &absolute) {
    if (absolute.scale != SpectrumScale::absolute) {
        return absolute;
    }
    NoiseSpectrum out = absolute;
    out.scale = SpectrumScale::db_rel_shot;
    for (double &p : out.power) {
        p = variance_to_db(p);
    }
    return out;
}

struct Notch {
    double center_hz = 0.0;
    double width_hz = 0.0;

    bool contains(double f) const noexcept {
        return std::abs(f - center_hz) <= 0.5 * width_hz;
    }
};

struct Band {
    double lo_hz = 0.0;
    double hi_hz = 0.0;
};

/// RMS of the per-bin dB difference a - b over `band`, skipping notched
/// bins. Absolute spectra are referred to the analytic shot level.
inline double rms_db_deviation(const NoiseSpectrum &a, const NoiseSpectrum &b, Band band,
                               std::span<const Notch> exclude = {}) {
    detail::require_same_grid(a, b);
    if (!(band.lo_hz <= band.hi_hz) || band.lo_hz < a.freqs.front() || band.hi_hz > a.freqs.back()) {
        fail(ErrorKind::invalid_argument, "comparison band lies outside the frequency grid");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double f = a.freqs[k];
        if (f < band.lo_hz || f > band.hi_hz) {
            continue;
        }
        bool notched = false;
        for (const auto &n : exclude) {
            notched = notched || n.contains(f);
        }
        if (notched) {
            continue;
        }
        const double d = detail::power_db(a, k) - detail::power_db(b, k);
        sum += d * d;
        ++count;
    }
    if (count == 0) {
        fail(ErrorKind::invalid_argument, "comparison band is empty after exclusions");
    }
    return std::sqrt(sum / static_cast<double>(count));
}

/// One-sided power per bin of an absolute Welch spectrum on an nfft grid.
inline std::vector<double> bin_power(const NoiseSpectrum &spectrum) {
    if (spectrum.scale != SpectrumScale::absolute || spectrum.size() < 2) {
        fail(ErrorKind::invalid_argument, "bin_power expects an absolute spectrum on an FFT grid");
    }
    const double nfft = 2.0 * static_cast<double>(spectrum.size() - 1);
    std::vector<double> out(spectrum.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const bool edge = k == 0 || k + 1 == out.size();
        out[k] = spectrum.power[k] * (edge ? 1.0 : 2.0) / nfft;
    }
    return out;
}

/// Sum of bin_power over bins with lo <= f <= hi.
inline double band_power(const NoiseSpectrum &spectrum, Band band) {
    const auto p = bin_power(spectrum);
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (spectrum.freqs[k] >= band.lo_hz && spectrum.freqs[k] <= band.hi_hz) {
            sum += p[k];
        }
    }
    return sum;
}

}  // namespace eitsq
