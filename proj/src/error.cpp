#include "claimtree/error.hpp"

namespace claimtree {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kUnknownNode: return "unknown-node";
    case ErrorKind::kParentFinalized: return "parent-finalized";
    case ErrorKind::kDoubleFinalize: return "double-finalize";
    case ErrorKind::kMissingReferences: return "missing-refs";
    case ErrorKind::kBudgetExhausted: return "budget-exhausted";
    case ErrorKind::kInvariantViolation: return "invariant-violation";
    case ErrorKind::kSchemaVersion: return "schema-version-mismatch";
    case ErrorKind::kIo: return "io-error";
    case ErrorKind::kParse: return "parse-error";
    case ErrorKind::kTransport: return "transport-error";
    case ErrorKind::kTimeout: return "timeout";
    case ErrorKind::kSchemaInvalid: return "schema-invalid";
    case ErrorKind::kFixtureGap: return "fixture-gap";
    case ErrorKind::kFixtureCollision: return "fixture-collision";
    case ErrorKind::kExtractionFailed: return "extraction-failed";
    case ErrorKind::kEvidenceUnavailable: return "evidence-unavailable";
    case ErrorKind::kDuplicateId: return "duplicate-id";
    case ErrorKind::kInapplicableOperator: return "inapplicable-operator";
    case ErrorKind::kCurationFailed: return "curation-failed";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kClaimSetMismatch: return "claim-set-mismatch";
  }
  return "unknown";
}

}  // namespace claimtree
