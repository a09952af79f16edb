#pragma once

#include <stdexcept>
#include <string>

namespace gcnet {

enum class ErrorKind {
  Input,        // bad argument or precondition
  Composition,  // layer shapes do not compose
  Format,       // malformed file
  Numeric,      // non-finite intermediate
  Config,       // experiment configuration
  Unsupported,  // operation not defined for this network
  Internal      // invariant violation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Same error with a phase prefix, e.g. "fine-tune: ...".
  Error with_phase(const std::string& phase) const {
    return Error(kind_, phase + ": " + what());
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) fail(kind, message);
}

}  // namespace gcnet
