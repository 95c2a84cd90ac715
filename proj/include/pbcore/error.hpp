// Copyright 2026 The pbcore Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PBCORE_ERROR_HPP
#define PBCORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pbcore {

// Mirrors pb_status in the C API; keep the numbering in sync.
enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kDegenerate = 3,
  kUnsupportedModel = 4,
  kParse = 5,
  kIo = 6,
  kTooLarge = 7,
  kInfeasible = 8,
  kSampler = 9,
  kInternal = 10,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an agent's marginal-value denominator sum_m x_m dU_i/dx_m is
// zero, i.e. the allocation gives that agent no value anywhere.
class DegenerateAgentError : public Error {
 public:
  DegenerateAgentError(std::size_t agent, const std::string& message)
      : Error(ErrorCode::kDegenerate, message), agent_(agent) {}

  std::size_t agent() const noexcept { return agent_; }

 private:
  std::size_t agent_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace pbcore

#endif  // PBCORE_ERROR_HPP
