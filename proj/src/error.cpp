#include "triage/error.hpp"

namespace triage {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::format: return "format";
    case ErrorCode::persistence: return "persistence";
    case ErrorCode::degenerate_class: return "degenerate_class";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::state: return "state";
    case ErrorCode::invalid_window: return "invalid_window";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::undefined_recall: return "undefined_recall";
    case ErrorCode::generation: return "generation";
  }
  return "unknown";
}

}  // namespace triage
