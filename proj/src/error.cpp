#include "larc/error.hpp"

namespace larc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidArguments: return "invalid-arguments";
    case ErrorCode::kUnknownRelation: return "unknown-relation";
    case ErrorCode::kUnknownConcept: return "unknown-concept";
    case ErrorCode::kUnresolvableConcept: return "unresolvable-concept";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNotRealizable: return "not-realizable";
    case ErrorCode::kConflictingArity: return "conflicting-arity";
    case ErrorCode::kEmptyScene: return "empty-scene";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kNonSquare: return "non-square";
    case ErrorCode::kInconsistentRules: return "inconsistent-rules";
    case ErrorCode::kNumericFailure: return "numeric-failure";
    case ErrorCode::kBackendUnavailable: return "backend-unavailable";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace larc
