#include "tcfg/error.hpp"

namespace tcfg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kUndefinedSimilarity: return "undefined-similarity";
    case ErrorKind::kAmbiguousProjection: return "ambiguous-projection";
    case ErrorKind::kInvalidSpec: return "invalid-spec";
    case ErrorKind::kInvalidSchedule: return "invalid-schedule";
    case ErrorKind::kInvalidStep: return "invalid-step";
    case ErrorKind::kDivisionByZero: return "division-by-zero";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kInvalidLabel: return "invalid-label";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kMissingFile: return "missing-file";
    case ErrorKind::kUnknownKey: return "unknown-key";
    case ErrorKind::kTypeMismatch: return "type-mismatch";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace tcfg
