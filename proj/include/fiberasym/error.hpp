#pragma once

#include <stdexcept>
#include <string>

namespace fiberasym {

enum class ErrorKind {
  Input,          // malformed or inconsistent caller data
  Divergence,     // integral does not exist for the given exponent / decay
  Unsupported,    // germ outside the supported regimes
  WrongCase,      // operation called for a regime it does not cover
  Numerical,      // budget exhausted, non-convergent extrapolation
  RankDeficient,  // least-squares design cannot separate the basis
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::WrongCase: return "wrong-case";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::RankDeficient: return "rank-deficient";
  }
  return "unknown";
}

// Every error names the module and the operation that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation, const std::string& message)
      : std::runtime_error(module + "::" + operation + ": " + to_string(kind) + ": " + message),
        kind_(kind),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
};

}  // namespace fiberasym
