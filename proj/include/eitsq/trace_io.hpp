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

// Raw trace files: each record is a 32-byte little-endian header followed by
// n_samples IEEE-754 binary32 samples. Records may be concatenated.
//
//   offset  size  field
//        0     4  magic "HTRC"
//        4     2  version (u16, = 1)
//        6     2  reserved (zero)
//        8     8  sample_rate (f64)
//       16     8  n_samples (u64)
//       24     8  record_id (u64)

#include <array>
#include <cmath>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eitsq/error.hpp"
#include "eitsq/trace_synth.hpp"

namespace eitsq {

inline constexpr std::uint16_t kTraceFormatVersion = 1;
inline constexpr std::size_t kTraceHeaderSize = 32;

static_assert(std::endian::native == std::endian::little, "trace I/O assumes a little-endian host");

namespace detail {

template <typename T>
void put_le(unsigned char *dst, T value) {
    std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
T get_le(const unsigned char *src) {
    T value;
    std::memcpy(&value, src, sizeof(T));
    return value;
}

}  // namespace detail

inline void write_trace(std::ostream &out, const HomodyneTrace &trace) {
    std::array<unsigned char, kTraceHeaderSize> header{};
    std::memcpy(header.data(), "HTRC", 4);
    detail::put_le<std::uint16_t>(header.data() + 4, kTraceFormatVersion);
    detail::put_le<double>(header.data() + 8, trace.sample_rate);
    detail::put_le<std::uint64_t>(header.data() + 16, trace.samples.size());
    detail::put_le<std::uint64_t>(header.data() + 24, trace.record_id);
    out.write(reinterpret_cast<const char *>(header.data()), header.size());
    out.write(reinterpret_cast<const char *>(trace.samples.data()),
              static_cast<std::streamsize>(trace.samples.size() * sizeof(float)));
}

/// Sequential reader over the records of one file.
class TraceReader {
   public:
    TraceReader(std::istream &in, std::string source) : in_(in), source_(std::move(source)) {
    }

    std::optional<HomodyneTrace> next() {
        std::array<unsigned char, kTraceHeaderSize> header{};
        in_.read(reinterpret_cast<char *>(header.data()), header.size());
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got == 0 && in_.eof()) {
            return std::nullopt;
        }
        const std::string where = source_ + " (record " + std::to_string(count_) + ")";
        if (got != header.size()) {
            fail(ErrorKind::format, where + ": truncated header");
        }
        if (std::memcmp(header.data(), "HTRC", 4) != 0) {
            fail(ErrorKind::format, where + ": bad magic, not a raw trace file");
        }
        const auto version = detail::get_le<std::uint16_t>(header.data() + 4);
        if (version != kTraceFormatVersion) {
            fail(ErrorKind::format, where + ": unsupported version " + std::to_string(version));
        }
        HomodyneTrace trace;
        trace.sample_rate = detail::get_le<double>(header.data() + 8);
        const auto n = detail::get_le<std::uint64_t>(header.data() + 16);
        trace.record_id = detail::get_le<std::uint64_t>(header.data() + 24);
        trace.seed_info = {0, trace.record_id};
        if (!(trace.sample_rate > 0.0) || !std::isfinite(trace.sample_rate)) {
            fail(ErrorKind::format, where + ": invalid sample rate");
        }
        if (n == 0 || n > (std::uint64_t{1} << 34)) {
            fail(ErrorKind::format, where + ": implausible sample count " + std::to_string(n));
        }
        trace.samples.resize(n);
        const auto bytes = static_cast<std::streamsize>(n * sizeof(float));
        in_.read(reinterpret_cast<char *>(trace.samples.data()), bytes);
        if (in_.gcount() != bytes) {
            fail(ErrorKind::format, where + ": truncated sample data");
        }
        ++count_;
        return trace;
    }

   private:
    std::istream &in_;
    std::string source_;
    std::size_t count_ = 0;
};

inline std::vector<HomodyneTrace> read_trace_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, path + ": cannot open trace file");
    }
    TraceReader reader(in, path);
    std::vector<HomodyneTrace> traces;
    while (auto trace = reader.next()) {
        traces.push_back(std::move(*trace));
    }
    if (traces.empty()) {
        fail(ErrorKind::format, path + ": no records");
    }
    return traces;
}

}  // namespace eitsq
