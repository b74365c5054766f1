#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimtree/evidence.hpp"
#include "claimtree/extract.hpp"
#include "claimtree/llm.hpp"
#include "claimtree/retrieval.hpp"
#include "claimtree/tree.hpp"

namespace claimtree {

// Outcome of verifying one node against its evidence. Accept and Reject end
// the node's exploration; Unsubstantiated asks for sub-claims.
enum class SpanDecision { kAccept, kReject, kUnsubstantiated };

std::string_view to_string(SpanDecision decision);
SpanDecision parse_span_decision(std::string_view name);
NodeState to_node_state(SpanDecision decision);

enum class ConsolidationMode {
  // Accepted iff every child is Accepted, Rejected iff any child is Rejected,
  // Unsubstantiated otherwise.
  kDeterministic,
  // The model judges the sub-tree; falls back to kDeterministic on failure.
  kLlm,
};

std::string_view to_string(ConsolidationMode mode);
ConsolidationMode parse_consolidation_mode(std::string_view name);

struct EngineConfig {
  SpanBudget budget;
  ExtractionStrategy strategy = ExtractionStrategy::kMedDecontext;
  size_t max_results = kDefaultMaxResults;
  size_t top_k = kDefaultTopK;
  ConsolidationMode consolidation = ConsolidationMode::kLlm;
  // Also show the node's own retrieved evidence to the consolidation model.
  bool consolidate_with_parent_evidence = false;
  int jobs = 1;

  void validate() const;
};

struct LeafVerdict {
  SpanDecision decision = SpanDecision::kUnsubstantiated;
  std::string reason;
  std::vector<EvidenceRef> refs;
  std::vector<std::string> dropped_ids;  // cited ids that were not supplied
  bool backend_called = false;
};

inline constexpr std::string_view kNoEvidenceReason = "no evidence retrieved";

// Judges a Verifying node against the supplied evidence. No evidence means
// Unsubstantiated without a model call. Cited ids outside `evidence` are
// dropped; a verdict left without citations becomes Unsubstantiated.
LeafVerdict verify_leaf(const ClaimNode& node, const std::vector<Evidence>& evidence,
                        const LlmClient& client);

// Deterministic consolidation rule over final child states.
NodeState consolidate_states(const std::vector<NodeState>& children);

// Score from 1 to 10 -> verdict: <=3 Rejected, >=8 Accepted, else
// Unsubstantiated.
NodeState state_from_score(int score);

// Sub-claims proposed by the model, trimmed and de-duplicated, never
// repeating the node's own claim.
std::vector<std::string> propose_subclaims(const ClaimNode& node, const ClaimNode* parent,
                                           const std::vector<Evidence>& evidence,
                                           const LlmClient& client);

// Append-only structured event log.
class EventLog {
 public:
  void add(std::string_view event, json fields = json::object());
  const std::vector<json>& entries() const { return entries_; }
  void assign(std::vector<json> entries) { entries_ = std::move(entries); }

 private:
  std::vector<json> entries_;
};

// Attaches as many proposals as the budget allows (fan-out cap first, then
// the remaining node capacity); extra proposals are logged and dropped. When
// nothing can be attached the node is finalized Unsubstantiated with
// `fallback_reason`.
std::vector<NodeId> attach_subclaims(VerificationTree& tree, NodeId node,
                                     std::vector<std::string> proposals,
                                     std::string_view fallback_reason, EventLog& log);

// Spanning step for a node whose leaf verdict was Unsubstantiated: asks for
// sub-claims when the node is above max_depth and attaches them. Returns the
// new child ids; an empty result means the node was finalized Unsubstantiated.
std::vector<NodeId> span_subtree(VerificationTree& tree, NodeId node,
                                 const std::vector<Evidence>& evidence,
                                 std::string_view leaf_reason, const LlmClient& client,
                                 EventLog& log);

struct ConsolidationDecision {
  NodeState state = NodeState::kUnsubstantiated;
  std::string reason;  // always lists the child ids and states
  std::optional<int> score;
  std::vector<std::string> essential_child_ids;
  bool fallback = false;  // llm mode failed, deterministic rule used
};

// Pure part of consolidation; `own_evidence` is shown to the model only when
// non-empty.
ConsolidationDecision decide_consolidation(const VerificationTree& tree, NodeId node,
                                           ConsolidationMode mode, const LlmClient* client,
                                           const std::vector<Evidence>& own_evidence = {});

// Finalizes a node whose children are all final. `refs` are the node's own
// retrieved evidence references, kept for the record.
const ClaimNode& consolidate(VerificationTree& tree, NodeId node, ConsolidationMode mode,
                             const LlmClient* client, std::vector<EvidenceRef> refs = {},
                             const std::vector<Evidence>& own_evidence = {});

// Every evidence item retrieved during a run, keyed by evidence id. The first
// retrieval of an id wins.
class EvidenceStore {
 public:
  void add(const Evidence& evidence) { items_.emplace(evidence.id, evidence); }
  bool contains(std::string_view id) const { return items_.count(std::string(id)) != 0; }
  const Evidence& get(std::string_view id) const;
  const std::map<std::string, Evidence>& items() const { return items_; }

 private:
  std::map<std::string, Evidence> items_;
};

struct VerifiedClaim {
  NodeId node_id;
  std::string claim;
  NodeState state = NodeState::kVerifying;
  std::string reason;
  std::vector<EvidenceRef> references;
};

struct VerifiedClaimSet {
  std::vector<VerifiedClaim> claims;  // the depth-1 nodes, in order
  VerificationTree tree;
};

// Full state of one verification run; enough to persist or resume it.
struct VerificationRun {
  VerificationTree tree;
  EvidenceStore evidence;
  EventLog events;
  // Evidence each node retrieved for itself, kept on consolidated nodes.
  std::map<NodeId, std::vector<EvidenceRef>> own_refs;
  std::vector<std::string> truncated_claims;  // extracted but over budget
  bool complete = false;
  std::string error;  // why a partial run stopped

  VerifiedClaimSet result() const;
};

// Drives extraction, retrieval, leaf verification, spanning and bottom-up
// consolidation. Work on the nodes of one tree level runs on `jobs` threads;
// all tree mutations are applied afterwards in node-id order, so artifacts do
// not depend on scheduling.
class Verifier {
 public:
  Verifier(EngineConfig config, const LlmClient& client, const ToolRegistry& registry);

  // `fixed_claims` skips extraction and verifies the given claim texts.
  // Backend exhaustion does not throw: the partial run comes back with
  // complete == false and `error` set. Extraction schema failures throw
  // kExtractionFailed.
  VerificationRun run(std::string_view query,
                      const std::optional<std::vector<std::string>>& fixed_claims = {}) const;

  // Continues a partial run from its last consistent state.
  VerificationRun resume(VerificationRun partial,
                         const std::optional<std::vector<std::string>>& fixed_claims = {}) const;

  const EngineConfig& config() const { return config_; }

 private:
  void advance(VerificationRun& run,
               const std::optional<std::vector<std::string>>& fixed_claims) const;
  void seed_claims(VerificationRun& run,
                   const std::optional<std::vector<std::string>>& fixed_claims) const;
  void expand(VerificationRun& run) const;
  void consolidate_all(VerificationRun& run) const;

  EngineConfig config_;
  const LlmClient& client_;
  const ToolRegistry& registry_;
};

}  // namespace claimtree
