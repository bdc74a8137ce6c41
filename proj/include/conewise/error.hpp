#pragma once

#include <stdexcept>
#include <string>

namespace conewise {

enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kDegreeOutOfRange = 3,
  kKernelWrap = 4,
  kUnderResolved = 5,
  kSingularSystem = 6,
  kCertificationFailed = 7,
  kPreconditionViolated = 8,
  kOutOfBand = 9,
  kIo = 10,
  kBudgetExceeded = 11,
  kInternal = 12,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace conewise
