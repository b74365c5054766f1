#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace claimtree {

using json = nlohmann::json;

enum class NodeState { kVerifying, kAccepted, kRejected, kUnsubstantiated };

std::string_view to_string(NodeState state);
NodeState parse_node_state(std::string_view name);

// Run-local node identifier. Rendered as a decimal string on disk.
struct NodeId {
  uint64_t value = 0;

  std::string str() const { return std::to_string(value); }
  static NodeId parse(std::string_view s);

  auto operator<=>(const NodeId&) const = default;
};

struct EvidenceRef {
  std::string evidence_id;
  // Character range [span_begin, span_end) of the cited snippet.
  size_t span_begin = 0;
  size_t span_end = 0;

  bool operator==(const EvidenceRef&) const = default;
};

struct ClaimNode {
  NodeId id;
  std::string claim;
  NodeState state = NodeState::kVerifying;
  std::optional<std::string> reason;
  std::vector<EvidenceRef> references;
  int depth = 0;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;

  bool is_leaf() const { return children.empty(); }
  bool finalized() const { return state != NodeState::kVerifying; }

  bool operator==(const ClaimNode&) const = default;
};

struct SpanBudget {
  int max_depth = 3;
  int max_children_per_node = 5;
  int max_total_nodes = 64;

  // Throws kInvalidInput unless every field is positive.
  void validate() const;

  bool operator==(const SpanBudget&) const = default;
};

inline constexpr int kTreeSchemaVersion = 1;

// Rooted ordered tree of claims. Mutations are not synchronized: callers keep
// a single writer per tree (the engine applies all mutations from one thread).
class VerificationTree {
 public:
  // The root holds an abstract of the query and starts out Verifying.
  static VerificationTree create(std::string_view query, SpanBudget budget = {});

  // Appends children in order. The batch is rejected as a whole if it would
  // break the depth, fan-out or total-node budget.
  std::vector<NodeId> add_children(NodeId parent, const std::vector<std::string>& claims);

  // Verifying -> {Accepted, Rejected, Unsubstantiated}. Grounded leaf verdicts
  // (Accepted/Rejected without children) need at least one reference.
  const ClaimNode& finalize(NodeId id, NodeState state, std::string reason,
                            std::vector<EvidenceRef> refs);

  // Verifying nodes with at least one child whose children are all final,
  // deepest first, ascending id within a depth.
  std::vector<NodeId> consolidation_ready() const;

  const ClaimNode& node(NodeId id) const;
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  const std::map<NodeId, ClaimNode>& nodes() const { return nodes_; }
  NodeId root() const { return root_; }
  const std::string& query() const { return query_; }
  const SpanBudget& budget() const { return budget_; }
  size_t size() const { return nodes_.size(); }
  int remaining_capacity() const {
    return budget_.max_total_nodes - static_cast<int>(nodes_.size());
  }
  bool fully_finalized() const;

  // Throws kInvariantViolation describing the first broken invariant.
  void validate() const;

  json to_json() const;
  static VerificationTree from_json(const json& doc);
  // Canonical text form: sorted keys, two-space indent, trailing newline.
  std::string serialize() const;

  bool operator==(const VerificationTree& other) const {
    return query_ == other.query_ && budget_ == other.budget_ && root_ == other.root_ &&
           nodes_ == other.nodes_;
  }

 private:
  ClaimNode& mutable_node(NodeId id);

  std::string query_;
  SpanBudget budget_;
  NodeId root_;
  std::map<NodeId, ClaimNode> nodes_;
  uint64_t next_id_ = 0;
};

// Shortened, whitespace-collapsed query used as the root claim.
std::string query_abstract(std::string_view query);

void save(const VerificationTree& tree, const std::filesystem::path& path);
VerificationTree load_tree(const std::filesystem::path& path);

json to_json(const EvidenceRef& ref);
EvidenceRef evidence_ref_from_json(const json& j);

}  // namespace claimtree
