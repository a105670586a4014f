#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rage {

enum class ErrorCode {
  kInvalidShape,
  kNumericInput,
  kContractViolation,
  kEmptyDataset,
  kFormat,
  kLength,
  kUndefinedDistance,
  kCalibration,
  kNoExpansion,
  kDegenerateWeights,
  kUndefinedMetric,
  kDivergence,
  kConfig,
  kIo,
};

/// Stable snake_case name used in machine-readable diagnostics.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rage
