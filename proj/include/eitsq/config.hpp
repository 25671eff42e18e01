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

// Scenario description shared by all CLI commands. Configs are JSON files;
// missing keys take the defaults below and unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eitsq/eit_medium.hpp"
#include "eitsq/error.hpp"
#include "eitsq/gaussian_optics.hpp"
#include "eitsq/spectral.hpp"
#include "eitsq/spectrum_io.hpp"
#include "eitsq/trace_synth.hpp"

namespace eitsq {

using nlohmann::json;

/// phi(nu) = amplitude * (nu / width) / (1 + (nu / width)^2), the dispersive
/// profile of a Lorentzian window.
struct PhaseProfileSpec {
    double amplitude_rad = 0.0;
    double width_hz = 300e3;

    SidebandPhaseProfile profile() const {
        const double a = amplitude_rad;
        const double w = width_hz;
        return [a, w](double nu) {
            const double x = nu / w;
            return a * x / (1.0 + x * x);
        };
    }
};

struct ExperimentConfig {
    double r = 0.0;
    std::optional<double> squeezing_db;
    double theta = 0.0;
    std::string theta_text = "0";

    TransmissionSource medium = WindowModel{};
    std::string table_path;
    std::uint64_t table_hash = 0;
    LossRecipe recipe = LossRecipe::symmetrized_mean;
    double opo_bandwidth_hz = 0.0;

    double sample_rate = 5e7;
    std::size_t record_samples = 65536;
    std::size_t n_records = 1000;
    WelchOptions analysis;
    DetectorModel detector;
    std::uint64_t master_seed = 1;
    std::optional<PhaseProfileSpec> sideband_phase;

    Band compare_band{1e4, 1.5e6};
    std::optional<double> notch_width_hz;
    std::vector<Notch> extra_notches;

    std::size_t synthesis_samples() const {
        return next_power_of_two(record_samples);
    }

    double effective_notch_width() const {
        return notch_width_hz.value_or(8.0 * sample_rate / static_cast<double>(analysis.nfft));
    }

    /// Configured notches plus one around every detector spur.
    std::vector<Notch> notches() const {
        std::vector<Notch> out = extra_notches;
        for (const auto &spur : detector.spurs) {
            out.push_back({spur.freq_hz, effective_notch_width()});
        }
        return out;
    }

    PredictOptions predict_options() const {
        PredictOptions opts;
        opts.recipe = recipe;
        opts.opo_bandwidth_hz = opo_bandwidth_hz;
        if (sideband_phase) {
            opts.sideband_phase = sideband_phase->profile();
        }
        return opts;
    }

    void validate() const {
        if (!std::isfinite(r) || r < 0.0) {
            fail(ErrorKind::config, "squeezing r must be finite and >= 0");
        }
        if (!std::isfinite(theta)) {
            fail(ErrorKind::config, "theta must be finite");
        }
        try {
            if (const auto *model = std::get_if<WindowModel>(&medium)) {
                model->validate();
            }
            analysis.validate();
            detector.validate(sample_rate);
        } catch (const Error &e) {
            fail(ErrorKind::config, e.what());
        }
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
            fail(ErrorKind::config, "sample_rate_hz must be > 0");
        }
        if (record_samples < 4) {
            fail(ErrorKind::config, "record_samples must be >= 4");
        }
        if (n_records < 1) {
            fail(ErrorKind::config, "n_records must be >= 1");
        }
        if (analysis.nfft > record_samples) {
            fail(ErrorKind::config, "analysis nfft exceeds record_samples");
        }
        if (!(opo_bandwidth_hz >= 0.0)) {
            fail(ErrorKind::config, "opo_bandwidth_hz must be >= 0");
        }
        if (sideband_phase && !(sideband_phase->width_hz > 0.0)) {
            fail(ErrorKind::config, "sideband phase width must be > 0");
        }
        if (!(compare_band.lo_hz <= compare_band.hi_hz) || compare_band.lo_hz < 0.0 ||
            compare_band.hi_hz > 0.5 * sample_rate) {
            fail(ErrorKind::config, "compare band must lie within [0, sample_rate / 2]");
        }
    }

    /// Effective configuration with every default filled in; the basis of the
    /// config hash.
    json canonical() const {
        json j;
        j["squeezing"] = {{"r", r}};
        j["theta"] = theta;
        j["theta_text"] = theta_text;
        if (const auto *model = std::get_if<WindowModel>(&medium)) {
            j["medium"] = {{"model",
                            {{"t_peak", model->t_peak},
                             {"t_bg", model->t_bg},
                             {"gamma_hwhm_hz", model->gamma_hwhm},
                             {"delta0_hz", model->delta0}}}};
        } else {
            j["medium"] = {{"table_fnv1a", hex64(table_hash)}};
        }
        j["loss_recipe"] = recipe == LossRecipe::symmetrized_mean ? "symmetrized" : "per_sideband";
        j["opo_bandwidth_hz"] = opo_bandwidth_hz;
        j["sampling"] = {{"sample_rate_hz", sample_rate},
                         {"record_samples", record_samples},
                         {"n_records", n_records}};
        j["analysis"] = {{"nfft", analysis.nfft},
                         {"window", std::string(to_string(analysis.window))},
                         {"overlap", analysis.overlap}};
        json spurs = json::array();
        for (const auto &s : detector.spurs) {
            spurs.push_back({{"freq_hz", s.freq_hz}, {"power_rel_shot", s.power_rel_shot}});
        }
        j["detector"] = {{"cmrr_db", detector.cmrr_db},
                         {"spurs", spurs},
                         {"quantizer_bits", detector.quantizer_bits ? json(*detector.quantizer_bits) : json()}};
        j["master_seed"] = master_seed;
        j["sideband_phase_profile"] =
            sideband_phase ? json{{"amplitude_rad", sideband_phase->amplitude_rad},
                                  {"width_hz", sideband_phase->width_hz}}
                           : json();
        json notches = json::array();
        for (const auto &n : extra_notches) {
            notches.push_back({{"center_hz", n.center_hz}, {"width_hz", n.width_hz}});
        }
        j["compare"] = {{"band_hz", {compare_band.lo_hz, compare_band.hi_hz}},
                        {"notch_width_hz", effective_notch_width()},
                        {"notches", notches}};
        return j;
    }

    std::string hash() const {
        return hex64(fnv1a64(canonical().dump()));
    }
};

/// Accepts a number or text such as "0", "pi/2", "-pi/4", "3*pi/4", "1.2".
inline double parse_theta(const json &value) {
    if (value.is_number()) {
        return value.get<double>();
    }
    if (!value.is_string()) {
        fail(ErrorKind::config, "theta must be a number or a string like \"pi/2\"");
    }
    std::string text = value.get<std::string>();
    std::erase(text, ' ');
    const auto bad = [&] { fail(ErrorKind::config, "cannot parse theta '" + text + "'"); };
    const auto pi_pos = text.find("pi");
    if (pi_pos == std::string::npos) {
        char *end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || *end != '\0') {
            bad();
        }
        return v;
    }
    std::string prefix = text.substr(0, pi_pos);
    std::string suffix = text.substr(pi_pos + 2);
    double factor = 1.0;
    if (prefix == "-") {
        factor = -1.0;
    } else if (!prefix.empty()) {
        if (prefix.back() != '*') {
            bad();
        }
        prefix.pop_back();
        char *end = nullptr;
        factor = std::strtod(prefix.c_str(), &end);
        if (prefix.empty() || *end != '\0') {
            bad();
        }
    }
    double divisor = 1.0;
    if (!suffix.empty()) {
        if (suffix.front() != '/') {
            bad();
        }
        suffix.erase(0, 1);
        char *end = nullptr;
        divisor = std::strtod(suffix.c_str(), &end);
        if (suffix.empty() || *end != '\0' || divisor == 0.0) {
            bad();
        }
    }
    return factor * std::numbers::pi / divisor;
}

namespace detail {

inline void reject_unknown(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
    if (!obj.is_object()) {
        fail(ErrorKind::config, where + " must be an object");
    }
    for (const auto &item : obj.items()) {
        if (!allowed.count(item.key())) {
            fail(ErrorKind::config, "unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json &obj, const char *key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    return obj.at(key).get<T>();
}

inline Band parse_band(const json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 2) {
        fail(ErrorKind::config, where + " must be [lo_hz, hi_hz]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

/// Builds a config from parsed JSON. Relative table paths resolve against
/// `base_dir`.
inline ExperimentConfig config_from_json(const json &j, const std::filesystem::path &base_dir = {}) {
    using detail::get_or;
    ExperimentConfig cfg;
    try {
        detail::reject_unknown(j,
                               {"squeezing", "theta", "medium", "loss_recipe", "opo_bandwidth_hz", "sampling",
                                "analysis", "detector", "master_seed", "sideband_phase_profile", "compare"},
                               "config");
        if (j.contains("squeezing")) {
            const json &sq = j.at("squeezing");
            detail::reject_unknown(sq, {"r", "db"}, "squeezing");
            if (sq.contains("r") && sq.contains("db")) {
                fail(ErrorKind::config, "squeezing: give either r or db, not both");
            }
            if (sq.contains("db")) {
                cfg.squeezing_db = sq.at("db").get<double>();
                cfg.r = squeezing_db_to_r(*cfg.squeezing_db);
            } else {
                cfg.r = get_or(sq, "r", 0.0);
            }
        }
        if (j.contains("theta")) {
            cfg.theta = parse_theta(j.at("theta"));
            cfg.theta_text = j.at("theta").is_string() ? j.at("theta").get<std::string>() : j.at("theta").dump();
        }
        if (j.contains("medium")) {
            const json &m = j.at("medium");
            detail::reject_unknown(m, {"model", "table"}, "medium");
            if (m.contains("model") && m.contains("table")) {
                fail(ErrorKind::config, "medium: give either model or table, not both");
            }
            if (m.contains("table")) {
                std::filesystem::path p = m.at("table").get<std::string>();
                if (p.is_relative() && !base_dir.empty()) {
                    p = base_dir / p;
                }
                cfg.table_path = p.string();
                cfg.table_hash = fnv1a64(read_text_file(p));
                cfg.medium = read_transmission_csv(cfg.table_path);
            } else if (m.contains("model")) {
                const json &w = m.at("model");
                detail::reject_unknown(w, {"t_peak", "t_bg", "gamma_hwhm_hz", "delta0_hz"}, "medium.model");
                WindowModel model;
                model.t_peak = get_or(w, "t_peak", model.t_peak);
                model.t_bg = get_or(w, "t_bg", model.t_bg);
                model.gamma_hwhm = get_or(w, "gamma_hwhm_hz", model.gamma_hwhm);
                model.delta0 = get_or(w, "delta0_hz", model.delta0);
                cfg.medium = model;
            }
        }
        if (j.contains("loss_recipe")) {
            const auto recipe = j.at("loss_recipe").get<std::string>();
            if (recipe == "symmetrized") {
                cfg.recipe = LossRecipe::symmetrized_mean;
            } else if (recipe == "per_sideband") {
                cfg.recipe = LossRecipe::per_sideband;
            } else {
                fail(ErrorKind::config, "loss_recipe must be 'symmetrized' or 'per_sideband'");
            }
        }
        cfg.opo_bandwidth_hz = get_or(j, "opo_bandwidth_hz", 0.0);
        if (j.contains("sampling")) {
            const json &s = j.at("sampling");
            detail::reject_unknown(s, {"sample_rate_hz", "record_samples", "n_records"}, "sampling");
            cfg.sample_rate = get_or(s, "sample_rate_hz", cfg.sample_rate);
            cfg.record_samples = get_or<std::size_t>(s, "record_samples", cfg.record_samples);
            cfg.n_records = get_or<std::size_t>(s, "n_records", cfg.n_records);
        }
        if (j.contains("analysis")) {
            const json &a = j.at("analysis");
            detail::reject_unknown(a, {"nfft", "window", "overlap"}, "analysis");
            cfg.analysis.nfft = get_or<std::size_t>(a, "nfft", cfg.analysis.nfft);
            if (a.contains("window")) {
                cfg.analysis.window = parse_window(a.at("window").get<std::string>());
            }
            cfg.analysis.overlap = get_or(a, "overlap", cfg.analysis.overlap);
        }
        if (j.contains("detector")) {
            const json &d = j.at("detector");
            detail::reject_unknown(d, {"cmrr_db", "spurs", "quantizer_bits"}, "detector");
            cfg.detector.cmrr_db = get_or(d, "cmrr_db", cfg.detector.cmrr_db);
            if (d.contains("spurs")) {
                for (const json &s : d.at("spurs")) {
                    detail::reject_unknown(s, {"freq_hz", "power_rel_shot"}, "detector.spurs[]");
                    cfg.detector.spurs.push_back({s.at("freq_hz").get<double>(), s.at("power_rel_shot").get<double>()});
                }
            }
            if (d.contains("quantizer_bits") && !d.at("quantizer_bits").is_null()) {
                cfg.detector.quantizer_bits = d.at("quantizer_bits").get<int>();
            }
        }
        cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", cfg.master_seed);
        if (j.contains("sideband_phase_profile") && !j.at("sideband_phase_profile").is_null()) {
            const json &p = j.at("sideband_phase_profile");
            detail::reject_unknown(p, {"amplitude_rad", "width_hz"}, "sideband_phase_profile");
            PhaseProfileSpec spec;
            spec.amplitude_rad = get_or(p, "amplitude_rad", spec.amplitude_rad);
            spec.width_hz = get_or(p, "width_hz", spec.width_hz);
            cfg.sideband_phase = spec;
        }
        if (j.contains("compare")) {
            const json &c = j.at("compare");
            detail::reject_unknown(c, {"band_hz", "notch_width_hz", "notches"}, "compare");
            if (c.contains("band_hz")) {
                cfg.compare_band = detail::parse_band(c.at("band_hz"), "compare.band_hz");
            }
            if (c.contains("notch_width_hz") && !c.at("notch_width_hz").is_null()) {
                cfg.notch_width_hz = c.at("notch_width_hz").get<double>();
            }
            if (c.contains("notches")) {
                for (const json &n : c.at("notches")) {
                    detail::reject_unknown(n, {"center_hz", "width_hz"}, "compare.notches[]");
                    cfg.extra_notches.push_back({n.at("center_hz").get<double>(), n.at("width_hz").get<double>()});
                }
            }
        }
    } catch (const json::exception &e) {
        fail(ErrorKind::config, std::string("config: ") + e.what());
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::config || e.kind() == ErrorKind::io) {
            throw;
        }
        fail(ErrorKind::config, e.what());
    }
    cfg.validate();
    return cfg;
}

/// Applies "a.b.c=value" overrides; the value is parsed as JSON when it can
/// be, otherwise taken as a string.
inline void apply_override(json &j, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        fail(ErrorKind::config, "override '" + assignment + "' is not of the form key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    json *node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            fail(ErrorKind::config, "override '" + assignment + "' has an empty key");
        }
        if (!node->is_object()) {
            *node = json::object();
        }
        node = &(*node)[key];
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    *node = std::move(value);
}

inline json load_config_json(const std::filesystem::path &path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
}

}  // namespace eitsq
