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

#include <cstdint>
#include <random>

namespace eitsq {

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Domain tags for the independent random substreams of one run.
enum class Stream : std::uint64_t {
    signal = 0x5349474e414c0001ULL,
    shot = 0x53484f5400000002ULL,
    spur_phase = 0x5350555200000003ULL,
    test = 0x5445535400000004ULL,
};

/// Seed for `domain`, derived from the master seed by domain-separated hashing.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, Stream domain) {
    return mix64(mix64(master) ^ static_cast<std::uint64_t>(domain));
}

/// Generator for one record of a substream.
inline std::mt19937_64 record_engine(std::uint64_t seed, std::uint64_t record_index) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(record_index), static_cast<std::uint32_t>(record_index >> 32),
    };
    return std::mt19937_64(seq);
}

}  // namespace eitsq
