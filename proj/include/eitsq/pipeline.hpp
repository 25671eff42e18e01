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

// End-to-end commands behind the CLI. Each command computes everything in
// memory first and only then writes its outputs, so a failure never leaves
// partial files behind.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eitsq/config.hpp"
#include "eitsq/eit_medium.hpp"
#include "eitsq/error.hpp"
#include "eitsq/parallel.hpp"
#include "eitsq/spectral.hpp"
#include "eitsq/spectrum_io.hpp"
#include "eitsq/trace_io.hpp"
#include "eitsq/trace_synth.hpp"

namespace eitsq {

namespace fs = std::filesystem;

struct RunOptions {
    fs::path out_dir = ".";
    std::size_t workers = 1;
    /// Write every synthesized record to out_dir/traces/{signal,shot}.htrc.
    bool export_traces = false;
};

inline json analysis_meta(const WelchOptions &opts, std::size_t records, const std::string &config_hash) {
    return {{"nfft", opts.nfft},
            {"window", std::string(to_string(opts.window))},
            {"overlap", opts.overlap},
            {"record_count", records},
            {"config_hash", config_hash},
            {"dc_bin_flagged", true}};
}

// ---------------------------------------------------------------------------
// predict

struct PredictResult {
    NoiseSpectrum absolute;
    NoiseSpectrum db;
    NoiseSpectrum shot;
};

inline PredictResult predict(const ExperimentConfig &cfg) {
    cfg.validate();
    const auto grid = fft_grid(cfg.sample_rate, cfg.analysis.nfft);
    PredictResult out;
    out.absolute = predict_noise_spectrum(cfg.r, cfg.theta, cfg.medium, grid, cfg.predict_options());
    out.db = to_db_rel_shot(out.absolute);
    out.shot = NoiseSpectrum{grid, std::vector<double>(grid.size(), kShotNoiseVariance), SpectrumScale::absolute};
    return out;
}

inline PredictResult cmd_predict(const ExperimentConfig &cfg, const RunOptions &run) {
    PredictResult res = predict(cfg);
    const json meta = analysis_meta(cfg.analysis, 0, cfg.hash());
    write_spectrum(run.out_dir / "predicted_absolute.csv", res.absolute, meta);
    write_spectrum(run.out_dir / "predicted_db.csv", res.db, meta);
    write_spectrum(run.out_dir / "shot_absolute.csv", res.shot, meta);
    return res;
}

// ---------------------------------------------------------------------------
// simulate

struct SpurCheck {
    double freq_hz = 0.0;
    double predicted_variance = 0.0;
    double measured_variance = 0.0;
    double delta_db = 0.0;
};

struct SimulateResult {
    NoiseSpectrum signal;
    NoiseSpectrum shot;
    NoiseSpectrum normalized;
    NoiseSpectrum predicted_db;
    NoiseSpectrum predicted_absolute;
    double rms_db = 0.0;
    std::vector<Notch> notches;
    std::vector<SpurCheck> spurs;
    std::size_t segments_per_record = 0;
    std::string config_hash;
};

/// Signal and shot records are drawn from disjoint substreams of the master
/// seed and processed in index-ordered batches; the outputs depend only on
/// the config, never on the worker count.
inline SimulateResult simulate(const ExperimentConfig &cfg, const RunOptions &run = {}) {
    cfg.validate();
    const std::size_t synth_n = cfg.synthesis_samples();
    const auto synth_grid = fft_grid(cfg.sample_rate, synth_n);
    const PredictOptions popts = cfg.predict_options();
    const NoiseSpectrum target = predict_noise_spectrum(cfg.r, cfg.theta, cfg.medium, synth_grid, popts);

    const RecordSynthesizer signal_synth(target, cfg.sample_rate, synth_n, popts.sideband_phase);
    const RecordSynthesizer shot_synth(flat_spectrum(kShotNoiseVariance, cfg.sample_rate), cfg.sample_rate,
                                       synth_n);
    const std::uint64_t signal_seed = derive_seed(cfg.master_seed, Stream::signal);
    const std::uint64_t shot_seed = derive_seed(cfg.master_seed, Stream::shot);
    const WelchEstimator estimator(cfg.analysis, cfg.sample_rate);

    std::optional<std::ofstream> signal_file;
    std::optional<std::ofstream> shot_file;
    fs::path trace_dir = run.out_dir / "traces";
    if (run.export_traces) {
        fs::create_directories(trace_dir);
        signal_file.emplace(trace_dir / "signal.htrc.tmp", std::ios::binary | std::ios::trunc);
        shot_file.emplace(trace_dir / "shot.htrc.tmp", std::ios::binary | std::ios::trunc);
        if (!*signal_file || !*shot_file) {
            fail(ErrorKind::io, trace_dir.string() + ": cannot open trace export files");
        }
    }

    std::vector<RecordPeriodogram> signal_parts(cfg.n_records);
    std::vector<RecordPeriodogram> shot_parts(cfg.n_records);
    const std::size_t batch = std::max<std::size_t>(16, 4 * run.workers);
    std::vector<HomodyneTrace> signal_batch(batch);
    std::vector<HomodyneTrace> shot_batch(batch);
    for (std::size_t first = 0; first < cfg.n_records; first += batch) {
        const std::size_t count = std::min(batch, cfg.n_records - first);
        parallel_for(2 * count, run.workers, [&](std::size_t job) {
            const std::size_t i = first + job / 2;
            const bool is_signal = job % 2 == 0;
            HomodyneTrace trace = is_signal ? signal_synth.synthesize(signal_seed, i) : shot_synth.synthesize(shot_seed, i);
            truncate(trace, cfg.record_samples);
            trace = apply_detector(std::move(trace), cfg.detector);
            (is_signal ? signal_parts : shot_parts)[i] = estimator.accumulate(trace);
            if (run.export_traces) {
                (is_signal ? signal_batch : shot_batch)[job / 2] = std::move(trace);
            }
        });
        if (run.export_traces) {
            for (std::size_t j = 0; j < count; ++j) {
                write_trace(*signal_file, signal_batch[j]);
                write_trace(*shot_file, shot_batch[j]);
            }
        }
    }

    SimulateResult res;
    res.config_hash = cfg.hash();
    res.signal = estimator.finalize(signal_parts);
    res.shot = estimator.finalize(shot_parts);
    res.normalized = normalize_to_shot(res.signal, res.shot);
    res.predicted_absolute = predict_noise_spectrum(cfg.r, cfg.theta, cfg.medium, res.signal.freqs, popts);
    res.predicted_db = to_db_rel_shot(res.predicted_absolute);
    res.notches = cfg.notches();
    res.rms_db = rms_db_deviation(res.normalized, res.predicted_db, cfg.compare_band, res.notches);
    res.segments_per_record = cfg.analysis.segments(cfg.record_samples);

    const double width = cfg.effective_notch_width();
    for (const auto &spur : cfg.detector.spurs) {
        const Band band{spur.freq_hz - 0.5 * width, spur.freq_hz + 0.5 * width};
        SpurCheck check;
        check.freq_hz = spur.freq_hz;
        check.predicted_variance = residual_spur_variance(spur, cfg.detector.cmrr_db);
        check.measured_variance = band_power(res.signal, band) - band_power(res.predicted_absolute, band);
        check.delta_db = 10.0 * std::log10(std::max(check.measured_variance, 1e-300) / check.predicted_variance);
        res.spurs.push_back(check);
    }

    if (run.export_traces) {
        signal_file->close();
        shot_file->close();
        if (!*signal_file || !*shot_file) {
            fail(ErrorKind::io, trace_dir.string() + ": trace export failed");
        }
        fs::rename(trace_dir / "signal.htrc.tmp", trace_dir / "signal.htrc");
        fs::rename(trace_dir / "shot.htrc.tmp", trace_dir / "shot.htrc");
    }
    return res;
}

inline json simulate_report(const ExperimentConfig &cfg, const SimulateResult &res) {
    json notches = json::array();
    for (const auto &n : res.notches) {
        notches.push_back({{"center_hz", n.center_hz}, {"width_hz", n.width_hz}});
    }
    json spurs = json::array();
    for (const auto &s : res.spurs) {
        spurs.push_back({{"freq_hz", s.freq_hz},
                         {"predicted_variance", s.predicted_variance},
                         {"measured_variance", s.measured_variance},
                         {"delta_db", s.delta_db}});
    }
    return {{"rms_db_deviation", res.rms_db},
            {"band_hz", {cfg.compare_band.lo_hz, cfg.compare_band.hi_hz}},
            {"notches", notches},
            {"spurs", spurs},
            {"n_records", cfg.n_records},
            {"record_samples", cfg.record_samples},
            {"synthesis_samples", cfg.synthesis_samples()},
            {"segments_per_record", res.segments_per_record},
            {"master_seed", cfg.master_seed},
            {"config_hash", res.config_hash},
            {"config", cfg.canonical()}};
}

inline SimulateResult cmd_simulate(const ExperimentConfig &cfg, const RunOptions &run) {
    SimulateResult res = simulate(cfg, run);
    const json meta = analysis_meta(cfg.analysis, cfg.n_records, res.config_hash);
    write_spectrum(run.out_dir / "simulated_db.csv", res.normalized, meta);
    write_spectrum(run.out_dir / "simulated_signal_absolute.csv", res.signal, meta);
    write_spectrum(run.out_dir / "simulated_shot_absolute.csv", res.shot, meta);
    write_spectrum(run.out_dir / "predicted_db.csv", res.predicted_db, meta);
    atomic_write(run.out_dir / "simulate_report.json", simulate_report(cfg, res).dump(2) + "\n");
    return res;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeResult {
    NoiseSpectrum spectrum;
    std::size_t records = 0;
    std::string config_hash;
};

namespace detail {

inline std::vector<RecordPeriodogram> periodograms_of(const std::vector<fs::path> &files,
                                                      const WelchOptions &opts,
                                                      std::optional<WelchEstimator> &estimator) {
    std::vector<RecordPeriodogram> parts;
    for (const auto &path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fail(ErrorKind::io, path.string() + ": cannot open trace file");
        }
        TraceReader reader(in, path.string());
        std::size_t n = 0;
        while (auto trace = reader.next()) {
            if (!estimator) {
                estimator.emplace(opts, trace->sample_rate);
            } else if (trace->sample_rate != estimator->sample_rate()) {
                fail(ErrorKind::invalid_argument, path.string() + ": sample rate differs from the earlier traces");
            }
            if (trace->samples.size() < opts.nfft) {
                fail(ErrorKind::invalid_argument, path.string() + ": record shorter than nfft");
            }
            parts.push_back(estimator->accumulate(*trace));
            ++n;
        }
        if (n == 0) {
            fail(ErrorKind::format, path.string() + ": no records");
        }
    }
    return parts;
}

}  // namespace detail

/// Welch spectrum of recorded traces; normalized to the shot reference when
/// one is given, absolute otherwise.
inline AnalyzeResult analyze(const std::vector<fs::path> &traces, const std::vector<fs::path> &shot_reference,
                             const WelchOptions &opts) {
    opts.validate();
    if (traces.empty()) {
        fail(ErrorKind::invalid_argument, "analyze needs at least one trace file");
    }
    std::optional<WelchEstimator> estimator;
    const auto parts = detail::periodograms_of(traces, opts, estimator);
    AnalyzeResult res;
    res.records = parts.size();
    res.spectrum = estimator->finalize(parts);
    json inputs = json::array();
    for (const auto &p : traces) {
        inputs.push_back(p.filename().string());
    }
    json refs = json::array();
    if (!shot_reference.empty()) {
        std::optional<WelchEstimator> shot_estimator = estimator;
        const auto shot_parts = detail::periodograms_of(shot_reference, opts, shot_estimator);
        res.spectrum = normalize_to_shot(res.spectrum, shot_estimator->finalize(shot_parts));
        for (const auto &p : shot_reference) {
            refs.push_back(p.filename().string());
        }
    }
    const json effective = {{"command", "analyze"},
                            {"analysis",
                             {{"nfft", opts.nfft},
                              {"window", std::string(to_string(opts.window))},
                              {"overlap", opts.overlap}}},
                            {"inputs", inputs},
                            {"shot_reference", refs}};
    res.config_hash = hex64(fnv1a64(effective.dump()));
    return res;
}

inline AnalyzeResult cmd_analyze(const std::vector<fs::path> &traces, const std::vector<fs::path> &shot_reference,
                                 const WelchOptions &opts, const RunOptions &run) {
    AnalyzeResult res = analyze(traces, shot_reference, opts);
    write_spectrum(run.out_dir / "analyzed.csv", res.spectrum, analysis_meta(opts, res.records, res.config_hash));
    return res;
}

// ---------------------------------------------------------------------------
// fit / compare

inline json window_json(const WindowModel &m) {
    return {{"t_peak", m.t_peak}, {"t_bg", m.t_bg}, {"gamma_hwhm_hz", m.gamma_hwhm}, {"delta0_hz", m.delta0}};
}

inline json fit_report_json(const FitReport &r) {
    return {{"model", window_json(r.model)},
            {"residual_rms", r.residual_rms},
            {"iterations", r.iterations},
            {"converged", r.converged}};
}

inline FitReport cmd_fit(const fs::path &table_csv, const RunOptions &run, const FitOptions &opts = {}) {
    const TransmissionTable table = read_transmission_csv(table_csv.string());
    const FitReport report = fit_window(table, std::nullopt, opts);
    json out = fit_report_json(report);
    out["input"] = table_csv.filename().string();
    out["input_fnv1a"] = hex64(fnv1a64(read_text_file(table_csv)));
    atomic_write(run.out_dir / "fit.json", out.dump(2) + "\n");
    return report;
}

inline json compare(const fs::path &a, const fs::path &b, Band band, const std::vector<Notch> &notches) {
    const NoiseSpectrum sa = read_spectrum(a, SpectrumScale::db_rel_shot);
    const NoiseSpectrum sb = read_spectrum(b, SpectrumScale::db_rel_shot);
    const double rms = rms_db_deviation(sa, sb, band, notches);
    json n = json::array();
    for (const auto &notch : notches) {
        n.push_back({{"center_hz", notch.center_hz}, {"width_hz", notch.width_hz}});
    }
    return {{"rms_db_deviation", rms},
            {"a", a.filename().string()},
            {"b", b.filename().string()},
            {"band_hz", {band.lo_hz, band.hi_hz}},
            {"notches", n}};
}

inline json cmd_compare(const fs::path &a, const fs::path &b, Band band, const std::vector<Notch> &notches,
                        const RunOptions &run) {
    json out = compare(a, b, band, notches);
    atomic_write(run.out_dir / "compare.json", out.dump(2) + "\n");
    return out;
}

}  // namespace eitsq
