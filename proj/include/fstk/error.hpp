#pragma once

#include <stdexcept>
#include <string>

namespace fstk {

// Coarse failure classes; the CLI maps these onto process exit codes.
enum class ErrorKind {
  Parameter,  // invalid arguments or configuration
  Shape,      // incompatible tensor / matrix dimensions
  Domain,     // point outside a basis or model domain
  Data,       // unusable numeric input (non-finite, degenerate, empty)
  Io,         // filesystem failure
  Decode,     // corrupt or mismatched file contents
  Compute,    // numerical failure inside an operation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace fstk
