#include "pim/error.hpp"

namespace pim {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kMissingEdge: return "missing_edge";
    case ErrorCode::kRepeatedNode: return "repeated_node";
    case ErrorCode::kTooShort: return "too_short";
    case ErrorCode::kNoPath: return "no_path";
    case ErrorCode::kEmptyPartition: return "empty_partition";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace pim
