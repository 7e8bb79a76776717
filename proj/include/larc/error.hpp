#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace larc {

enum class ErrorCode {
  kInvalidConfig,
  kInvalidArguments,
  kUnknownRelation,
  kUnknownConcept,
  kUnresolvableConcept,
  kParse,
  kNotRealizable,
  kConflictingArity,
  kEmptyScene,
  kOutOfRange,
  kNonSquare,
  kInconsistentRules,
  kNumericFailure,
  kBackendUnavailable,
  kConfiguration,
  kIo,
  kFormat,
};

std::string_view to_string(ErrorCode code);

/// Base error for every module. The code is stable and machine readable;
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::kParse,
              "offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace larc
