#include "distrittrl/error.hpp"

namespace distrittrl {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kStructural: return "structural";
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kArgument: return "argument";
    case ErrorCategory::kState: return "state";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

std::string Error::tagged() const {
  return "[" + std::string(to_string(category_)) + "] " + what();
}

void fail(ErrorCategory category, const std::string& message) { throw Error(category, message); }

}  // namespace distrittrl
