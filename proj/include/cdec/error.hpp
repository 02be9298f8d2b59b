#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdec {

enum class ErrorKind {
  kConfiguration,
  kValidation,
  kScorerCompatibility,
  kDegenerateScorer,
  kUnsupportedConfiguration,
  kScorer,
  kData,
  kUsage,
  kDomain,
  kUndefinedMetric,
  kInternal,
};

std::string_view to_string(ErrorKind kind);

// All engine failures are reported as cdec::Error; kind() says which contract broke.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit codes: 0 ok, 1 usage, 2 data, 3 internal invariant.
int exit_code_for(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace cdec
