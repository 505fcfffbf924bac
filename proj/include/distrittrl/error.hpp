#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distrittrl {

enum class ErrorCategory {
  kParse,
  kStructural,
  kValidation,
  kArgument,
  kState,
  kIo,
};

std::string_view to_string(ErrorCategory category);

// Every library failure is reported through this type. what() carries the
// bare message; tagged() prefixes it with the category for CLI output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  std::string tagged() const;

 private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& message);

}  // namespace distrittrl
