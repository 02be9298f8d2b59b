#include "cdec/error.hpp"

namespace cdec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kScorerCompatibility: return "scorer-compatibility";
    case ErrorKind::kDegenerateScorer: return "degenerate-scorer";
    case ErrorKind::kUnsupportedConfiguration: return "unsupported-configuration";
    case ErrorKind::kScorer: return "scorer";
    case ErrorKind::kData: return "data";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kInternal: return "internal";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfiguration:
    case ErrorKind::kUnsupportedConfiguration:
    case ErrorKind::kDomain:
      return 1;
    case ErrorKind::kInternal:
      return 3;
    default:
      return 2;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace cdec
