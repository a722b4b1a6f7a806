#pragma once

#include <stdexcept>
#include <string>

namespace cltlab {

// Error taxonomy shared by all modules. The CLI maps kinds to exit codes:
// config -> 2, degenerate_observable -> 4, everything else numeric -> 3.
enum class ErrorKind {
  config,
  domain,
  unsupported_system,
  insufficient_data,
  degenerate_observable,
  singular_collision,
  horizon_cap,
  invalid_geometry,
  class_mismatch,
  convergence,
  numeric,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

} // namespace cltlab
