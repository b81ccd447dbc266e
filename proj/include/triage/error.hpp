#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triage {

enum class ErrorCode {
  invalid_argument,
  format,
  persistence,
  degenerate_class,
  not_found,
  state,
  invalid_window,
  stratification,
  undefined_recall,
  generation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI and the HTTP layer can map it to an exit code or status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace triage
