#pragma once

#include <stdexcept>
#include <string>

namespace cdl {

enum class ErrorKind {
  kParse,
  kValidation,
  kArgument,
  kShape,
  kNumeric,
  kIo,
  kTraining,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` drives the C API status
// code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cdl
