#pragma once

#include <stdexcept>
#include <string>

namespace tcfg {

enum class ErrorKind {
  kInvalidInput,
  kUndefinedSimilarity,
  kAmbiguousProjection,
  kInvalidSpec,
  kInvalidSchedule,
  kInvalidStep,
  kDivisionByZero,
  kDimensionMismatch,
  kInvalidLabel,
  kEmptyInput,
  kMissingFile,
  kUnknownKey,
  kTypeMismatch,
  kIo,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Configuration problems (missing file, unknown key, bad value type).
  bool is_config_error() const noexcept {
    return kind_ == ErrorKind::kMissingFile || kind_ == ErrorKind::kUnknownKey ||
           kind_ == ErrorKind::kTypeMismatch;
  }

 private:
  ErrorKind kind_;
};

}  // namespace tcfg
