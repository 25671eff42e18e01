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

// Acceptance gate. One line per criterion; nonzero exit if any fails.
//
//   acceptance [--workdir DIR] [--workers N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eitsq/config.hpp"
#include "eitsq/eit_medium.hpp"
#include "eitsq/gaussian_optics.hpp"
#include "eitsq/pipeline.hpp"

using namespace eitsq;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kR = 0.3466;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Clock {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char *pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// Scenario runs are shared between criteria; each is executed once with one
// worker and once with the configured pool, and both outputs are kept.
struct Run {
    ExperimentConfig cfg;
    SimulateResult res;
    fs::path dir_a;
    fs::path dir_b;
    double seconds = 0.0;
};

json full_scale(double theta) {
    return {{"squeezing", {{"r", kR}}},
            {"theta", theta},
            {"medium", {{"model", {{"t_peak", 0.9}, {"t_bg", 0.02}, {"gamma_hwhm_hz", 300e3}, {"delta0_hz", 0.0}}}}},
            {"sampling", {{"sample_rate_hz", 5e7}, {"record_samples", 65536}, {"n_records", 1000}}},
            {"analysis", {{"nfft", 8192}, {"window", "hann"}, {"overlap", 0.5}}},
            {"detector",
             {{"cmrr_db", -58.0},
              {"spurs", {{{"freq_hz", 100e3}, {"power_rel_shot", 1e6}}}},
              {"quantizer_bits", 8}}},
            {"master_seed", 20261014},
            {"compare", {{"band_hz", {1e4, 1.5e6}}}}};
}

json shape_scenario(double theta) {
    json j = full_scale(theta);
    j["medium"]["model"]["t_bg"] = 0.0;
    j.erase("detector");
    j["master_seed"] = 314159;
    return j;
}

Run execute(const std::string &name, const json &j, const fs::path &workdir, std::size_t workers) {
    Run run;
    run.cfg = config_from_json(j);
    run.dir_a = workdir / (name + "_w1");
    run.dir_b = workdir / (name + "_w" + std::to_string(workers));
    if (workers == 1) {
        run.dir_b += "_again";
    }
    fs::remove_all(run.dir_a);
    fs::remove_all(run.dir_b);
    Clock clock;
    run.res = cmd_simulate(run.cfg, {run.dir_a, 1});
    run.seconds = clock.seconds();
    cmd_simulate(run.cfg, {run.dir_b, workers});
    cmd_predict(run.cfg, {run.dir_a});
    return run;
}

const std::vector<std::string> kOutputs = {"simulated_db.csv",
                                           "simulated_db.json",
                                           "simulated_signal_absolute.csv",
                                           "simulated_shot_absolute.csv",
                                           "predicted_db.csv",
                                           "simulate_report.json"};

bool identical_outputs(const Run &run, std::string &first_diff) {
    for (const auto &f : kOutputs) {
        if (read_text_file(run.dir_a / f) != read_text_file(run.dir_b / f)) {
            first_diff = (run.dir_b / f).string();
            return false;
        }
    }
    return true;
}

double oracle_eq(double r, double theta, double t) {
    return 0.25 * (t * (std::cosh(2 * r) - std::cos(2 * theta) * std::sinh(2 * r)) + 1 - t);
}

Outcome criterion_1() {
    Clock clock;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            for (int k = 0; k < 20; ++k) {
                const double r = 2.0 * i / 19;
                const double theta = kPi * j / 19;
                const double t = 1.0 * k / 19;
                const double cov = quadrature_variance(apply_loss(tmsv_state(r), t, t), theta).value;
                const double closed = eq5_variance(r, theta, t).value;
                const double oracle = oracle_eq(r, theta, t);
                worst = std::max({worst, std::abs(cov - closed) / closed, std::abs(cov - oracle) / oracle});
            }
        }
    }
    const double s = clock.seconds();
    return {worst < 1e-12 && s < 1.0, fmt("max rel err %.2e over 8000 points (< 1e-12), %.3f s (< 1 s)", worst, s)};
}

Outcome criterion_2(const fs::path &workdir, std::size_t workers) {
    Clock clock;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto state = apply_loss(apply_sideband_phase(tmsv_state(2.0 * u(rng)), 2 * kPi * u(rng)), u(rng), u(rng));
        const double theta = 2 * kPi * u(rng);
        const double phi = 2 * kPi * u(rng) - kPi;
        const double before = quadrature_variance(state, theta).value;
        const double after = quadrature_variance(apply_sideband_phase(state, phi), theta).value;
        worst = std::max(worst, std::abs(after - before));
    }

    // End to end: the same records with and without a strong dispersive
    // sideband phase, at a reduced record count.
    json base = full_scale(kPi / 2);
    base.erase("detector");
    base["sampling"]["n_records"] = 100;
    json phased = base;
    phased["sideband_phase_profile"] = {{"amplitude_rad", 2.5}, {"width_hz", 300e3}};
    const auto plain_cfg = config_from_json(base);
    const auto phased_cfg = config_from_json(phased);
    const auto a = simulate(plain_cfg, {workdir, workers});
    const auto b = simulate(phased_cfg, {workdir, workers});
    const double between = rms_db_deviation(a.normalized, b.normalized, plain_cfg.compare_band);
    const bool spectra_differ = a.signal.power != b.signal.power;
    const double s = clock.seconds();
    const bool pass = worst < 1e-10 && between < 0.3 && b.rms_db < 0.3 && spectra_differ && s < 30.0;
    return {pass, fmt("max |dV| %.2e (< 1e-10); with vs without profile %.3f dB, profile vs analytic %.3f dB "
                      "(< 0.3 dB); %.1f s (< 30 s)",
                      worst, between, b.rms_db, s)};
}

Outcome criterion_3() {
    Clock clock;
    const WindowModel truth{0.9, 0.02, 300e3, 0.0};
    int good = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(1000 + trial);
        std::normal_distribution<double> noise(0.0, 0.01);
        std::vector<TransmissionRow> rows;
        for (int i = -100; i <= 100; ++i) {
            const double nu = i * 20e3;
            rows.push_back({nu, std::clamp(transmission(truth, nu) + noise(rng), 0.0, 1.0)});
        }
        const double rel = std::abs(fit_window(TransmissionTable(rows)).model.gamma_hwhm / 300e3 - 1.0);
        worst = std::max(worst, rel);
        good += rel < 0.02;
    }
    const double s = clock.seconds();
    return {good >= 95 && s < 10.0,
            fmt("%d/100 within 2%% (>= 95), worst %.2f%%, %.2f s (< 10 s)", good, 100 * worst, s)};
}

Outcome criterion_4(const Run &sq, const Run &anti) {
    const double pred_sq = rms_db_deviation(read_spectrum(sq.dir_a / "simulated_db.csv", SpectrumScale::db_rel_shot),
                                            read_spectrum(sq.dir_a / "predicted_db.csv", SpectrumScale::db_rel_shot),
                                            sq.cfg.compare_band, sq.cfg.notches());
    const double pred_anti =
        rms_db_deviation(read_spectrum(anti.dir_a / "simulated_db.csv", SpectrumScale::db_rel_shot),
                         read_spectrum(anti.dir_a / "predicted_db.csv", SpectrumScale::db_rel_shot),
                         anti.cfg.compare_band, anti.cfg.notches());
    const bool pass = pred_sq < 0.3 && pred_anti < 0.3 && sq.res.rms_db == pred_sq && anti.res.rms_db == pred_anti;
    return {pass, fmt("theta=0 %.4f dB, theta=pi/2 %.4f dB over [10 kHz, 1.5 MHz] (< 0.3 dB); "
                      "%.1f s + %.1f s per full-scale run",
                      pred_sq, pred_anti, sq.seconds, anti.seconds)};
}

Outcome criterion_5(const Run &sq, const Run &anti) {
    bool pass = true;
    std::ostringstream detail;
    // High frequencies: RMS distance to the shot line over [1.5 MHz, Nyquist].
    const Band high{1.5e6, sq.cfg.sample_rate / 2};
    double high_max = 0.0;
    double high_rms[2];
    int idx = 0;
    for (const Run *run : {&sq, &anti}) {
        const auto &n = run->res.normalized;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < n.size(); ++k) {
            if (n.freqs[k] >= high.lo_hz && n.freqs[k] <= high.hi_hz) {
                sum += n.power[k] * n.power[k];
                high_max = std::max(high_max, std::abs(n.power[k]));
                ++count;
            }
        }
        high_rms[idx++] = std::sqrt(sum / count);
    }
    pass = pass && high_rms[0] < 0.1 && high_rms[1] < 0.1;
    detail << fmt("nu >= 1.5 MHz rms to shot %.4f / %.4f dB (< 0.1 dB, per-bin max %.3f dB); ", high_rms[0],
                  high_rms[1], high_max);

    // Low frequencies: every bin in [10 kHz, 50 kHz] on the predicted side of
    // shot and within 0.2 dB of the closed form.
    double low_worst = 0.0;
    bool sides = true;
    for (const Run *run : {&sq, &anti}) {
        const auto &n = run->res.normalized;
        const double sign = run == &sq ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n.size(); ++k) {
            if (n.freqs[k] >= 1e4 && n.freqs[k] <= 5e4) {
                const double eq = variance_to_db(eq5_variance(kR, run->cfg.theta,
                                                              transmission(std::get<WindowModel>(run->cfg.medium),
                                                                           n.freqs[k]))
                                                     .value);
                low_worst = std::max(low_worst, std::abs(n.power[k] - eq));
                sides = sides && sign * n.power[k] > 0;
            }
        }
    }
    pass = pass && sides && low_worst < 0.2;
    detail << fmt("10-50 kHz: theta=0 below and theta=pi/2 above shot: %s, max |sim - closed form| %.3f dB (< 0.2 dB)",
                  sides ? "yes" : "no", low_worst);
    return {pass, detail.str()};
}

Outcome criterion_6(const Run &run) {
    // Shot records of the detector-free scenario against the exact shot level.
    const auto rel = to_db_rel_shot(run.res.shot);
    double sum = 0.0;
    double sum2 = 0.0;
    double worst = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
        if (rel.freqs[k] < 1e4) {
            continue;
        }
        sum += rel.power[k];
        sum2 += rel.power[k] * rel.power[k];
        worst = std::max(worst, std::abs(rel.power[k]));
        ++count;
    }
    const double mean = sum / count;
    const double sd = std::sqrt(std::max(0.0, sum2 / count - mean * mean));
    return {sd < 0.2 && worst < 0.5 && std::abs(mean) < 0.2,
            fmt("%zu records, %zu bins: mean %.4f dB, sd %.4f dB (< 0.2), max |dev| %.3f dB (< 0.5)",
                run.cfg.n_records, count, mean, sd, worst)};
}

Outcome criterion_7(const Run &run) {
    const auto &spur = run.res.spurs.at(0);
    const auto &s = run.res.signal;
    std::size_t peak = 1;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s.power[k] > s.power[peak]) {
            peak = k;
        }
    }
    const double bin = s.freqs[1] - s.freqs[0];
    const bool located = std::abs(s.freqs[peak] - spur.freq_hz) <= bin;
    bool notched = false;
    for (const auto &n : run.res.notches) {
        notched = notched || n.contains(spur.freq_hz);
    }
    return {std::abs(spur.delta_db) < 1.0 && located && notched,
            fmt("peak at %.0f Hz, residual %.4f measured vs %.4f predicted (%+.3f dB, within 1 dB), notched: %s",
                s.freqs[peak], spur.measured_variance, spur.predicted_variance, spur.delta_db,
                notched ? "yes" : "no")};
}

Outcome criterion_8(const std::vector<const Run *> &runs, std::size_t workers) {
    for (const Run *run : runs) {
        std::string diff;
        if (!identical_outputs(*run, diff)) {
            return {false, "differs: " + diff};
        }
    }
    return {true, fmt("%zu scenarios x %zu files byte-identical between a 1-worker run and a %zu-worker rerun",
                      runs.size(), kOutputs.size(), workers)};
}

}  // namespace

int main(int argc, char **argv) {
    fs::path workdir = fs::temp_directory_path() / "eitsq_acceptance";
    std::size_t workers = 3;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workdir" && i + 1 < argc) {
            workdir = argv[++i];
        } else if (arg == "--workers" && i + 1 < argc) {
            workers = std::stoul(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--workdir DIR] [--workers N]\n";
            return 2;
        }
    }
    fs::create_directories(workdir);

    int failures = 0;
    const auto report = [&](int id, const char *name, const std::function<Outcome()> &fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
    };

    Clock total;
    report(1, "closed-form equivalence", criterion_1);
    report(2, "sideband phase invariance", [&] { return criterion_2(workdir, workers); });
    report(3, "window recovery", criterion_3);

    Run sq, anti, shape_sq, shape_anti;
    try {
        sq = execute("c4_theta0", full_scale(0.0), workdir, workers);
        anti = execute("c4_theta_pi2", full_scale(kPi / 2), workdir, workers);
        shape_sq = execute("c5_theta0", shape_scenario(0.0), workdir, workers);
        shape_anti = execute("c5_theta_pi2", shape_scenario(kPi / 2), workdir, workers);
    } catch (const std::exception &e) {
        std::cout << "FAIL [4-8] scenario runs: exception: " << e.what() << std::endl;
        return 1;
    }
    report(4, "simulated vs analytic spectrum", [&] { return criterion_4(sq, anti); });
    report(5, "window shape vs shot line", [&] { return criterion_5(shape_sq, shape_anti); });
    report(6, "shot-noise calibration", [&] { return criterion_6(shape_sq); });
    report(7, "detector spur", [&] { return criterion_7(sq); });
    report(8, "determinism", [&] { return criterion_8({&sq, &anti, &shape_sq, &shape_anti}, workers); });

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << fmt(" (%.1f s)", total.seconds())
              << std::endl;
    return failures == 0 ? 0 : 1;
}
