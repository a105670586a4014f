#include "rage/error.hpp"

namespace rage {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidShape: return "invalid_shape";
    case ErrorCode::kNumericInput: return "numeric_input";
    case ErrorCode::kContractViolation: return "contract_violation";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kFormat: return "format_error";
    case ErrorCode::kLength: return "length_error";
    case ErrorCode::kUndefinedDistance: return "undefined_distance";
    case ErrorCode::kCalibration: return "calibration_error";
    case ErrorCode::kNoExpansion: return "no_expansion";
    case ErrorCode::kDegenerateWeights: return "degenerate_weights";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace rage
