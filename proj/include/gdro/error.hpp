#pragma once

#include <stdexcept>
#include <string>

namespace gdro {

// Failure categories. The C API maps these one-to-one onto gdro_status codes.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidDimension,
  kIo,
  kParse,
  kNumericDivergence,
  kEmptyGroup,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace gdro
