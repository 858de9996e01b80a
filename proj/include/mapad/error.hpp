#pragma once

#include <stdexcept>
#include <string>

namespace mapad {

enum class ErrorCode {
  schema,
  parse,
  degenerate_column,
  too_few_rows,
  undefined_metric,
  dimension,
  numeric,
  infeasible_k,
  domain,
  non_convergence,
  unreachable_target,
  no_control,
  infeasible,
  invalid_argument,
  unsupported,
  io,
};

const char* to_string(ErrorCode code);

/// Base exception for everything the library reports. The code lets callers
/// (CLI, HTTP service) map failures onto exit codes or status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mapad
