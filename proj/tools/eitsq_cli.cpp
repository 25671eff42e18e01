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

// eitsq: predict | simulate | analyze | fit | compare

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eitsq/config.hpp"
#include "eitsq/error.hpp"
#include "eitsq/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool json_errors = false;
    std::size_t workers = 1;
    std::vector<std::string> overrides;
    std::optional<std::string> theta;
    std::optional<std::size_t> n_records;
};

void add_common(CLI::App *cmd, CommonFlags &flags, bool with_config) {
    if (with_config) {
        cmd->add_option("--config", flags.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--seed", flags.seed, "Override master_seed");
        cmd->add_option("--set", flags.overrides, "Override a config key, e.g. sampling.n_records=10");
        cmd->add_option("--theta", flags.theta, "Override the LO phase (radians or e.g. pi/2)");
        cmd->add_option("--n-records", flags.n_records, "Override sampling.n_records");
    }
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--json-errors", flags.json_errors, "Report errors as a JSON object on stderr");
}

eitsq::ExperimentConfig load_config(const CommonFlags &flags) {
    json j = json::object();
    fs::path base;
    if (!flags.config_path.empty()) {
        j = eitsq::load_config_json(flags.config_path);
        base = fs::path(flags.config_path).parent_path();
    }
    for (const auto &o : flags.overrides) {
        eitsq::apply_override(j, o);
    }
    if (flags.seed) {
        j["master_seed"] = *flags.seed;
    }
    if (flags.theta) {
        json value = json::parse(*flags.theta, nullptr, false);
        j["theta"] = value.is_number() ? value : json(*flags.theta);
    }
    if (flags.n_records) {
        j["sampling"]["n_records"] = *flags.n_records;
    }
    return eitsq::config_from_json(j, base);
}

eitsq::RunOptions run_options(const CommonFlags &flags) {
    eitsq::RunOptions run;
    run.out_dir = flags.out_dir;
    run.workers = flags.workers;
    return run;
}

std::vector<eitsq::Notch> parse_notches(const std::vector<std::string> &specs) {
    std::vector<eitsq::Notch> out;
    for (const auto &s : specs) {
        const auto comma = s.find(',');
        if (comma == std::string::npos) {
            eitsq::fail(eitsq::ErrorKind::invalid_argument, "notch '" + s + "' must be CENTER_HZ,WIDTH_HZ");
        }
        try {
            out.push_back({std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))});
        } catch (const std::logic_error &) {
            eitsq::fail(eitsq::ErrorKind::invalid_argument, "notch '" + s + "' must be CENTER_HZ,WIDTH_HZ");
        }
    }
    return out;
}

int report_error(bool as_json, std::string_view kind, const std::string &message) {
    if (as_json) {
        std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    } else {
        std::cerr << "eitsq: error: " << message << "\n";
    }
    return 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Squeezed vacuum through an EIT window: prediction, simulation and spectral analysis"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto *predict = app.add_subcommand("predict", "Analytic noise spectrum for a config");
    add_common(predict, flags, true);

    bool export_traces = false;
    auto *simulate = app.add_subcommand("simulate", "Monte Carlo homodyne records and their averaged spectrum");
    add_common(simulate, flags, true);
    simulate->add_flag("--export-traces", export_traces, "Write raw trace files under OUT/traces");

    std::vector<std::string> trace_files;
    std::vector<std::string> shot_files;
    std::size_t nfft = 8192;
    std::string window = "hann";
    double overlap = 0.5;
    auto *analyze = app.add_subcommand("analyze", "Welch spectrum of raw trace files");
    add_common(analyze, flags, false);
    analyze->add_option("traces", trace_files, "Raw trace files")->required()->check(CLI::ExistingFile);
    analyze->add_option("--shot", shot_files, "Shot-noise reference trace files")->check(CLI::ExistingFile);
    analyze->add_option("--nfft", nfft, "FFT length (power of two)");
    analyze->add_option("--window", window, "rectangular | hann");
    analyze->add_option("--overlap", overlap, "Segment overlap fraction in [0, 0.9]");

    std::string table_csv;
    int max_iterations = 200;
    auto *fit = app.add_subcommand("fit", "Fit the Lorentzian window to a transmission table");
    add_common(fit, flags, false);
    fit->add_option("table", table_csv, "Transmission CSV (detuning_hz,transmittance)")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--max-iterations", max_iterations, "Iteration limit");

    std::string spectrum_a;
    std::string spectrum_b;
    std::vector<double> band{1e4, 1.5e6};
    std::vector<std::string> notch_specs;
    auto *compare = app.add_subcommand("compare", "RMS dB deviation between two spectrum files");
    add_common(compare, flags, false);
    compare->add_option("a", spectrum_a, "First spectrum CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("b", spectrum_b, "Second spectrum CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--band", band, "LO_HZ HI_HZ")->expected(2);
    compare->add_option("--notch", notch_specs, "Excluded band CENTER_HZ,WIDTH_HZ (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (flags.json_errors && e.get_exit_code() != 0) {
            return report_error(true, "usage", e.what());
        }
        return app.exit(e);
    }

    try {
        if (predict->parsed()) {
            const auto cfg = load_config(flags);
            eitsq::cmd_predict(cfg, run_options(flags));
            std::cout << "predict: wrote " << (fs::path(flags.out_dir) / "predicted_db.csv").string()
                      << " (config " << cfg.hash() << ")\n";
        } else if (simulate->parsed()) {
            const auto cfg = load_config(flags);
            auto run = run_options(flags);
            run.export_traces = export_traces;
            const auto res = eitsq::cmd_simulate(cfg, run);
            std::cout << "simulate: " << cfg.n_records << " records, rms deviation vs analytic "
                      << res.rms_db << " dB (config " << res.config_hash << ")\n";
        } else if (analyze->parsed()) {
            eitsq::WelchOptions opts;
            opts.nfft = nfft;
            opts.window = eitsq::parse_window(window);
            opts.overlap = overlap;
            std::vector<fs::path> traces(trace_files.begin(), trace_files.end());
            std::vector<fs::path> shots(shot_files.begin(), shot_files.end());
            const auto res = eitsq::cmd_analyze(traces, shots, opts, run_options(flags));
            std::cout << "analyze: " << res.records << " records, scale " << eitsq::to_string(res.spectrum.scale)
                      << "\n";
        } else if (fit->parsed()) {
            eitsq::FitOptions opts;
            opts.max_iterations = max_iterations;
            try {
                const auto report = eitsq::cmd_fit(table_csv, run_options(flags), opts);
                std::cout << eitsq::fit_report_json(report).dump(2) << "\n";
            } catch (const eitsq::FitError &e) {
                if (flags.json_errors) {
                    std::cerr << json{{"error",
                                       {{"kind", eitsq::to_string(e.kind())},
                                        {"message", e.what()},
                                        {"best", eitsq::fit_report_json(e.best())}}}}
                                     .dump()
                              << "\n";
                    return 1;
                }
                throw;
            }
        } else if (compare->parsed()) {
            const auto out = eitsq::cmd_compare(spectrum_a, spectrum_b, {band[0], band[1]},
                                                parse_notches(notch_specs), run_options(flags));
            std::cout << out.dump(2) << "\n";
        }
    } catch (const eitsq::Error &e) {
        return report_error(flags.json_errors, eitsq::to_string(e.kind()), e.what());
    } catch (const std::exception &e) {
        return report_error(flags.json_errors, "internal", e.what());
    }
    return 0;
}
