// Copyright 2026 The truckloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace truckloop {

/// Base class of every error raised by the library. `code()` is a short
/// machine-readable tag that the CLI prints as the error prefix.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define TRUCKLOOP_DEFINE_ERROR(Name, Code)                                    \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(Code, what) {}         \
    }

TRUCKLOOP_DEFINE_ERROR(DimensionError, "dimension");
TRUCKLOOP_DEFINE_ERROR(SizeError, "size");
TRUCKLOOP_DEFINE_ERROR(ParameterError, "parameter");
TRUCKLOOP_DEFINE_ERROR(LookupError, "lookup");
TRUCKLOOP_DEFINE_ERROR(TransportError, "transport");
TRUCKLOOP_DEFINE_ERROR(ParseError, "parse");
TRUCKLOOP_DEFINE_ERROR(ValidationError, "validation");
TRUCKLOOP_DEFINE_ERROR(UnsupportedRankError, "rank");
TRUCKLOOP_DEFINE_ERROR(IoError, "io");
TRUCKLOOP_DEFINE_ERROR(SolverError, "solver");

#undef TRUCKLOOP_DEFINE_ERROR

}  // namespace truckloop
