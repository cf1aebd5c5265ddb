/* Copyright 2026 The stalloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stalloc {

enum class ErrorCode {
  kMalformedHeader,
  kDimensionMismatch,
  kNonFinitePayload,
  kIoFailure,
  kShapeMismatch,
  kNonFiniteResult,
  kOracleFailure,
  kDegenerateGrid,
  kTooFewFrames,
  kInvalidStepSplit,
  kEmptyFeasibleSet,
  kEmptyInput,
  kShapeInconsistency,
  kDegenerateSketch,
  kInvalidArgument,
};

// Stable identifiers; bindings and the CLI surface these verbatim.
constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonFinitePayload: return "non-finite-payload";
    case ErrorCode::kIoFailure: return "io-failure";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kNonFiniteResult: return "non-finite-result";
    case ErrorCode::kOracleFailure: return "oracle-failure";
    case ErrorCode::kDegenerateGrid: return "degenerate-grid";
    case ErrorCode::kTooFewFrames: return "too-few-frames";
    case ErrorCode::kInvalidStepSplit: return "invalid-step-split";
    case ErrorCode::kEmptyFeasibleSet: return "empty-feasible-set";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kShapeInconsistency: return "shape-inconsistency";
    case ErrorCode::kDegenerateSketch: return "degenerate-sketch";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when no action meets the budget. Carries the density of the
/// candidate closest to the requested target so callers can report it.
class EmptyFeasibleSetError : public Error {
 public:
  EmptyFeasibleSetError(const std::string& message, double nearest_density)
      : Error(ErrorCode::kEmptyFeasibleSet, message), nearest_density_(nearest_density) {}

  double nearest_density() const noexcept { return nearest_density_; }

 private:
  double nearest_density_;
};

}  // namespace stalloc
