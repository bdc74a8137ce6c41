#include "conewise/error.hpp"

namespace conewise {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDegreeOutOfRange: return "degree_out_of_range";
    case ErrorCode::kKernelWrap: return "kernel_wrap";
    case ErrorCode::kUnderResolved: return "under_resolved";
    case ErrorCode::kSingularSystem: return "singular_system";
    case ErrorCode::kCertificationFailed: return "certification_failed";
    case ErrorCode::kPreconditionViolated: return "precondition_violated";
    case ErrorCode::kOutOfBand: return "out_of_band";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace conewise
