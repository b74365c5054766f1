#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace claimtree {

enum class ErrorKind {
  kInvalidInput,
  kUnknownNode,
  kParentFinalized,
  kDoubleFinalize,
  kMissingReferences,
  kBudgetExhausted,
  kInvariantViolation,
  kSchemaVersion,
  kIo,
  kParse,
  kTransport,
  kTimeout,
  kSchemaInvalid,
  kFixtureGap,
  kFixtureCollision,
  kExtractionFailed,
  kEvidenceUnavailable,
  kDuplicateId,
  kInapplicableOperator,
  kCurationFailed,
  kUndefinedMetric,
  kClaimSetMismatch,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this one exception type; callers
// branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Backend transport, timeout and schema failures; the engine treats these
  // as backend exhaustion and persists a partial run.
  bool is_backend_failure() const noexcept {
    return kind_ == ErrorKind::kTransport || kind_ == ErrorKind::kTimeout ||
           kind_ == ErrorKind::kSchemaInvalid || kind_ == ErrorKind::kFixtureGap;
  }

 private:
  ErrorKind kind_;
};

}  // namespace claimtree
