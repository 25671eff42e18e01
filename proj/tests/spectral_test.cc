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

#include "eitsq/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "eitsq/eit_medium.hpp"
#include "eitsq/trace_synth.hpp"
#include "gtest/gtest.h"

using namespace eitsq;

namespace {

constexpr double kFs = 5e7;
constexpr std::size_t kN = 65536;
const double kR2 = std::log(2.0) / 2.0;

double db_std(const NoiseSpectrum &s, double level) {
    double sum = 0.0;
    double sum2 = 0.0;
    for (double p : s.power) {
        const double d = 10.0 * std::log10(p / level);
        sum += d;
        sum2 += d * d;
    }
    const double n = double(s.size());
    return std::sqrt(sum2 / n - (sum / n) * (sum / n));
}

NoiseSpectrum shot_average(std::size_t records, std::uint64_t seed, const WelchOptions &opts = {}) {
    const RecordSynthesizer synth(flat_spectrum(0.25, kFs), kFs, kN);
    const WelchEstimator est(opts, kFs);
    std::vector<RecordPeriodogram> parts;
    for (std::size_t i = 0; i < records; ++i) {
        parts.push_back(est.accumulate(synth.synthesize(seed, i)));
    }
    return est.finalize(parts);
}

}  // namespace

TEST(spectral, grid_contract) {
    const auto s = shot_average(1, 1);
    ASSERT_EQ(s.size(), 4097u);
    EXPECT_EQ(s.freqs.front(), 0.0);
    EXPECT_DOUBLE_EQ(s.freqs.back(), kFs / 2);
    EXPECT_DOUBLE_EQ(s.freqs[1], kFs / 8192);
    EXPECT_EQ(s.scale, SpectrumScale::absolute);
}

TEST(spectral, segment_bookkeeping) {
    const WelchOptions hann;
    EXPECT_EQ(hann.hop(), 4096u);
    EXPECT_EQ(hann.segments(65536), 15u);
    EXPECT_EQ(hann.segments(50000), 11u);
    const WelchOptions none{8192, WindowKind::rectangular, 0.0};
    EXPECT_EQ(none.segments(65536), 8u);
    EXPECT_THROW((WelchOptions{1000, WindowKind::hann, 0.5}.validate()), Error);
    EXPECT_THROW((WelchOptions{1024, WindowKind::hann, 0.95}.validate()), Error);
}

TEST(spectral, thousand_shot_records_are_flat) {
    const auto s = shot_average(1000, 2);
    for (std::size_t k = 0; k < s.size(); ++k) {
        EXPECT_NEAR(10.0 * std::log10(s.power[k] / 0.25), 0.0, 0.2) << s.freqs[k];
    }
}

TEST(spectral, sinusoid_at_bin_center) {
    const std::size_t nfft = 1024;
    const double amplitude = 0.7;
    const std::size_t bin = 37;
    HomodyneTrace t;
    t.sample_rate = kFs;
    for (std::size_t n = 0; n < 4 * nfft; ++n) {
        t.samples.push_back(float(amplitude * std::cos(2.0 * std::numbers::pi * double(bin * n) / double(nfft))));
    }
    const auto s = welch_psd(std::span(&t, 1), WelchOptions{nfft, WindowKind::rectangular, 0.0});
    const auto p = bin_power(s);
    EXPECT_NEAR(p[bin], amplitude * amplitude / 2.0, 1e-6);
    EXPECT_LT(p[bin + 1], 1e-10);
    // The Hann window spreads the line over three bins; the total is kept.
    const auto h = welch_psd(std::span(&t, 1), WelchOptions{nfft, WindowKind::hann, 0.5});
    const Band around{s.freqs[bin - 4], s.freqs[bin + 4]};
    EXPECT_NEAR(band_power(h, around), amplitude * amplitude / 2.0, 1e-5);
}

TEST(spectral, input_errors) {
    std::vector<HomodyneTrace> none;
    EXPECT_THROW(welch_psd(none, WelchOptions{}), Error);
    std::vector<HomodyneTrace> mixed{shot_noise_record(kFs, 8192, 1, 0), shot_noise_record(2 * kFs, 8192, 1, 1)};
    EXPECT_THROW(welch_psd(mixed, WelchOptions{}), Error);
    std::vector<HomodyneTrace> too_short{shot_noise_record(kFs, 4096, 1, 0)};
    EXPECT_THROW(welch_psd(too_short, WelchOptions{}), Error);
}

TEST(spectral, normalize_to_shot) {
    const auto ref = shot_average(2, 3);
    auto db = normalize_to_shot(ref, ref);
    EXPECT_EQ(db.scale, SpectrumScale::db_rel_shot);
    for (double p : db.power) {
        EXPECT_EQ(p, 0.0);
    }
    auto doubled = ref;
    for (double &p : doubled.power) {
        p *= 2.0;
    }
    for (double p : normalize_to_shot(doubled, ref).power) {
        EXPECT_NEAR(p, 3.0103, 1e-4);
    }
    // Ideal estimates of an unattenuated squeezed vacuum.
    const TransmissionSource open = WindowModel{1.0, 1.0, 1e5, 0.0};
    const auto ideal = predict_noise_spectrum(kR2, 0.0, open, ref.freqs);
    const NoiseSpectrum shot{ref.freqs, std::vector<double>(ref.size(), 0.25), SpectrumScale::absolute};
    for (double p : normalize_to_shot(ideal, shot).power) {
        EXPECT_NEAR(p, -3.0103, 1e-4);
    }
    auto bad = shot;
    bad.power[10] = 0.0;
    EXPECT_THROW(normalize_to_shot(ideal, bad), Error);
    auto shifted = shot;
    shifted.freqs.pop_back();
    shifted.power.pop_back();
    EXPECT_THROW(normalize_to_shot(ideal, shifted), Error);
}

TEST(spectral, rms_db_deviation_basics) {
    const auto grid = fft_grid(kFs, 8192);
    NoiseSpectrum a{grid, std::vector<double>(grid.size(), -1.0), SpectrumScale::db_rel_shot};
    NoiseSpectrum b = a;
    EXPECT_EQ(rms_db_deviation(a, b, {1e4, 1.5e6}), 0.0);
    for (double &p : b.power) {
        p += 0.5;
    }
    EXPECT_NEAR(rms_db_deviation(a, b, {1e4, 1.5e6}), 0.5, 1e-12);
    // A large excursion inside a notch is ignored.
    a.power[16] = 40.0;
    const std::vector<Notch> notch{{grid[16], 3.0 * grid[1]}};
    EXPECT_NEAR(rms_db_deviation(a, b, {1e4, 1.5e6}, notch), 0.5, 1e-12);
    EXPECT_GT(rms_db_deviation(a, b, {1e4, 1.5e6}), 1.0);
    const std::vector<Notch> everything{{1e6, 1e7}};
    EXPECT_THROW(rms_db_deviation(a, b, {1e4, 1.5e6}, everything), Error);
    EXPECT_THROW(rms_db_deviation(a, b, {1e4, 1e9}), Error);
    // Absolute spectra are referred to the 0.25 shot level.
    NoiseSpectrum abs{grid, std::vector<double>(grid.size(), 0.5), SpectrumScale::absolute};
    NoiseSpectrum zero_db{grid, std::vector<double>(grid.size(), 0.0), SpectrumScale::db_rel_shot};
    EXPECT_NEAR(rms_db_deviation(abs, zero_db, {0.0, kFs / 2}), 3.0103, 1e-4);
}

TEST(spectral, averaging_reduces_scatter_by_sqrt_two) {
    const double one = db_std(shot_average(100, 4), 0.25);
    const double two = db_std(shot_average(200, 5), 0.25);
    EXPECT_NEAR(one / two, std::sqrt(2.0), 0.1 * std::sqrt(2.0));
}

TEST(spectral, window_choice_does_not_bias_smooth_spectra) {
    const auto target =
        predict_noise_spectrum(kR2, std::numbers::pi / 2, WindowModel{0.9, 0.02, 300e3, 0}, fft_grid(kFs, kN));
    const RecordSynthesizer synth(target, kFs, kN);
    const WelchEstimator hann(WelchOptions{8192, WindowKind::hann, 0.5}, kFs);
    const WelchEstimator rect(WelchOptions{8192, WindowKind::rectangular, 0.0}, kFs);
    std::vector<RecordPeriodogram> ph;
    std::vector<RecordPeriodogram> pr;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto t = synth.synthesize(6, i);
        ph.push_back(hann.accumulate(t));
        pr.push_back(rect.accumulate(t));
    }
    EXPECT_LT(rms_db_deviation(hann.finalize(ph), rect.finalize(pr), {1e4, 1.5e6}), 0.1);
}

TEST(spectral, white_bin_sum_is_variance) {
    const auto s = shot_average(50, 7, WelchOptions{8192, WindowKind::rectangular, 0.0});
    double total = 0.0;
    for (double p : bin_power(s)) {
        total += p;
    }
    EXPECT_NEAR(total / 0.25, 1.0, 0.01);
}

TEST(spectral, schedule_independent) {
    std::vector<HomodyneTrace> traces;
    for (std::uint64_t i = 0; i < 37; ++i) {
        traces.push_back(shot_noise_record(kFs, 16384, 8, i));
    }
    const auto serial = welch_psd(traces, WelchOptions{}, 1);
    const auto parallel = welch_psd(traces, WelchOptions{}, 4);
    EXPECT_EQ(serial.power, parallel.power);
}
