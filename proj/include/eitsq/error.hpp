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

#include <stdexcept>
#include <string>
#include <string_view>

namespace eitsq {

enum class ErrorKind {
    invalid_argument,
    domain,
    degenerate,
    non_convergence,
    format,
    io,
    config,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument:
            return "invalid_argument";
        case ErrorKind::domain:
            return "domain";
        case ErrorKind::degenerate:
            return "degenerate";
        case ErrorKind::non_convergence:
            return "non_convergence";
        case ErrorKind::format:
            return "format";
        case ErrorKind::io:
            return "io";
        case ErrorKind::config:
            return "config";
    }
    return "unknown";
}

/// Base exception for everything thrown by the library.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) {
    }

    ErrorKind kind() const noexcept {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

}  // namespace eitsq
