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

// Spectrum files: CSV with header `freq_hz,power` and a JSON sidecar
// carrying the scale and the analysis settings. All writes go to a
// temporary file first and are renamed into place.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "eitsq/error.hpp"
#include "eitsq/noise_spectrum.hpp"

namespace eitsq {

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

inline void atomic_write(const std::filesystem::path &path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            fail(ErrorKind::io, path.parent_path().string() + ": cannot create directory: " + ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::io, tmp.string() + ": cannot open for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fail(ErrorKind::io, tmp.string() + ": write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorKind::io, path.string() + ": cannot rename into place: " + ec.message());
    }
}

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, path.string() + ": cannot open");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_spectrum_csv(const NoiseSpectrum &spectrum) {
    std::string out = "freq_hz,power\n";
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        out += format_double(spectrum.freqs[k]);
        out += ',';
        out += format_double(spectrum.power[k]);
        out += '\n';
    }
    return out;
}

inline NoiseSpectrum parse_spectrum_csv(std::istream &in, SpectrumScale scale, const std::string &source) {
    std::string line;
    if (!std::getline(in, line) || (line != "freq_hz,power" && line != "freq_hz,power\r")) {
        fail(ErrorKind::format, source + ": expected header 'freq_hz,power'");
    }
    NoiseSpectrum s;
    s.scale = scale;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        char *end = nullptr;
        const std::string a = line.substr(0, comma);
        const std::string b = comma == std::string::npos ? "" : line.substr(comma + 1);
        const double f = std::strtod(a.c_str(), &end);
        const bool ok_a = !a.empty() && *end == '\0';
        const double p = std::strtod(b.c_str(), &end);
        const bool ok_b = !b.empty() && *end == '\0';
        if (!ok_a || !ok_b) {
            fail(ErrorKind::format, source + ":" + std::to_string(line_no) + ": malformed row");
        }
        s.freqs.push_back(f);
        s.power.push_back(p);
    }
    try {
        s.validate();
    } catch (const Error &e) {
        fail(ErrorKind::format, source + ": " + e.what());
    }
    return s;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path &csv) {
    std::filesystem::path p = csv;
    p.replace_extension(".json");
    return p;
}

/// Reads a spectrum CSV; the scale comes from the sidecar when one exists,
/// otherwise `fallback` is assumed.
inline NoiseSpectrum read_spectrum(const std::filesystem::path &csv, SpectrumScale fallback) {
    SpectrumScale scale = fallback;
    const auto side = sidecar_path(csv);
    if (std::filesystem::exists(side)) {
        try {
            const auto meta = nlohmann::json::parse(read_text_file(side));
            scale = parse_scale(meta.at("scale").get<std::string>());
        } catch (const nlohmann::json::exception &e) {
            fail(ErrorKind::format, side.string() + ": bad sidecar: " + e.what());
        }
    }
    std::ifstream in(csv, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, csv.string() + ": cannot open spectrum file");
    }
    return parse_spectrum_csv(in, scale, csv.string());
}

/// Writes `<name>.csv` and `<name>.json`; `meta` gets the scale added.
inline void write_spectrum(const std::filesystem::path &csv, const NoiseSpectrum &spectrum, nlohmann::json meta) {
    meta["scale"] = std::string(to_string(spectrum.scale));
    meta["bins"] = spectrum.size();
    atomic_write(csv, format_spectrum_csv(spectrum));
    atomic_write(sidecar_path(csv), meta.dump(2) + "\n");
}

}  // namespace eitsq
