#include "claimtree/tree.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {
namespace {

constexpr size_t kAbstractLimit = 160;

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorKind::kInvariantViolation, what);
}

}  // namespace

std::string_view to_string(NodeState state) {
  switch (state) {
    case NodeState::kVerifying: return "verifying";
    case NodeState::kAccepted: return "accepted";
    case NodeState::kRejected: return "rejected";
    case NodeState::kUnsubstantiated: return "unsubstantiated";
  }
  return "verifying";
}

NodeState parse_node_state(std::string_view name) {
  if (name == "verifying") return NodeState::kVerifying;
  if (name == "accepted") return NodeState::kAccepted;
  if (name == "rejected") return NodeState::kRejected;
  if (name == "unsubstantiated") return NodeState::kUnsubstantiated;
  throw Error(ErrorKind::kParse, "unknown node state '" + std::string(name) + "'");
}

NodeId NodeId::parse(std::string_view s) {
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kParse, "bad node id '" + std::string(s) + "'");
  }
  return NodeId{value};
}

void SpanBudget::validate() const {
  if (max_depth < 1 || max_children_per_node < 1 || max_total_nodes < 1) {
    throw Error(ErrorKind::kInvalidInput, "span budget fields must be positive");
  }
}

std::string query_abstract(std::string_view query) {
  auto words = text::split_whitespace(query);
  std::string out;
  for (const auto& word : words) {
    if (!out.empty() && out.size() + 1 + word.size() > kAbstractLimit) {
      out += " ...";
      return out;
    }
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

VerificationTree VerificationTree::create(std::string_view query, SpanBudget budget) {
  budget.validate();
  if (text::trim(query).empty()) {
    throw Error(ErrorKind::kInvalidInput, "query is empty");
  }
  VerificationTree tree;
  tree.query_ = std::string(query);
  tree.budget_ = budget;
  tree.root_ = NodeId{tree.next_id_++};
  ClaimNode root;
  root.id = tree.root_;
  root.claim = query_abstract(query);
  tree.nodes_.emplace(root.id, std::move(root));
  return tree;
}

const ClaimNode& VerificationTree::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorKind::kUnknownNode, "no node " + id.str());
  return it->second;
}

ClaimNode& VerificationTree::mutable_node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorKind::kUnknownNode, "no node " + id.str());
  return it->second;
}

std::vector<NodeId> VerificationTree::add_children(NodeId parent_id,
                                                   const std::vector<std::string>& claims) {
  ClaimNode& parent = mutable_node(parent_id);
  if (parent.finalized()) {
    throw Error(ErrorKind::kParentFinalized, "node " + parent_id.str() + " is already " +
                                                 std::string(to_string(parent.state)));
  }
  if (claims.empty()) throw Error(ErrorKind::kInvalidInput, "no child claims given");
  for (const auto& claim : claims) {
    if (text::trim(claim).empty()) throw Error(ErrorKind::kInvalidInput, "empty child claim");
  }
  if (parent.depth + 1 > budget_.max_depth) {
    throw Error(ErrorKind::kBudgetExhausted,
                "children of node " + parent_id.str() + " would exceed max_depth");
  }
  if (parent.children.size() + claims.size() >
      static_cast<size_t>(budget_.max_children_per_node)) {
    throw Error(ErrorKind::kBudgetExhausted,
                std::to_string(claims.size()) + " children exceed max_children_per_node=" +
                    std::to_string(budget_.max_children_per_node));
  }
  if (nodes_.size() + claims.size() > static_cast<size_t>(budget_.max_total_nodes)) {
    throw Error(ErrorKind::kBudgetExhausted,
                "tree would exceed max_total_nodes=" + std::to_string(budget_.max_total_nodes));
  }

  std::vector<NodeId> ids;
  ids.reserve(claims.size());
  const int depth = parent.depth + 1;
  for (const auto& claim : claims) {
    ClaimNode child;
    child.id = NodeId{next_id_++};
    child.claim = text::trim(claim);
    child.depth = depth;
    child.parent = parent_id;
    ids.push_back(child.id);
    nodes_.emplace(child.id, std::move(child));
  }
  // The emplace calls may not invalidate map references, so `parent` is live.
  parent.children.insert(parent.children.end(), ids.begin(), ids.end());
  return ids;
}

const ClaimNode& VerificationTree::finalize(NodeId id, NodeState state, std::string reason,
                                            std::vector<EvidenceRef> refs) {
  ClaimNode& target = mutable_node(id);
  if (target.finalized()) {
    throw Error(ErrorKind::kDoubleFinalize, "node " + id.str() + " is already " +
                                                std::string(to_string(target.state)));
  }
  if (state == NodeState::kVerifying) {
    throw Error(ErrorKind::kInvalidInput, "cannot finalize into verifying");
  }
  if (text::trim(reason).empty()) {
    throw Error(ErrorKind::kInvalidInput, "finalize of node " + id.str() + " needs a reason");
  }
  const bool grounded = state == NodeState::kAccepted || state == NodeState::kRejected;
  if (target.is_leaf() && grounded && refs.empty()) {
    throw Error(ErrorKind::kMissingReferences,
                "leaf " + id.str() + " verdict needs at least one evidence reference");
  }
  target.state = state;
  target.reason = std::move(reason);
  target.references = std::move(refs);
  return target;
}

std::vector<NodeId> VerificationTree::consolidation_ready() const {
  std::vector<NodeId> ready;
  for (const auto& [id, n] : nodes_) {
    if (n.finalized() || n.children.empty()) continue;
    bool all_final = std::all_of(n.children.begin(), n.children.end(),
                                 [&](NodeId c) { return node(c).finalized(); });
    if (all_final) ready.push_back(id);
  }
  std::stable_sort(ready.begin(), ready.end(), [&](NodeId a, NodeId b) {
    return node(a).depth > node(b).depth;
  });
  return ready;
}

bool VerificationTree::fully_finalized() const {
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const auto& kv) { return kv.second.finalized(); });
}

void VerificationTree::validate() const {
  budget_.validate();
  if (nodes_.empty()) violation("tree has no nodes");
  if (nodes_.size() > static_cast<size_t>(budget_.max_total_nodes)) {
    violation("node count " + std::to_string(nodes_.size()) + " exceeds max_total_nodes");
  }
  auto root_it = nodes_.find(root_);
  if (root_it == nodes_.end()) violation("root " + root_.str() + " missing");
  for (const auto& [id, n] : nodes_) {
    if (n.id != id) violation("node key " + id.str() + " holds id " + n.id.str());
    if (id == root_) {
      if (n.parent) violation("root has a parent");
      if (n.depth != 0) violation("root depth is not 0");
    } else {
      if (!n.parent) violation("second root " + id.str());
      auto p = nodes_.find(*n.parent);
      if (p == nodes_.end()) violation("node " + id.str() + " has dangling parent");
      const auto& siblings = p->second.children;
      if (std::count(siblings.begin(), siblings.end(), id) != 1) {
        violation("node " + id.str() + " not listed exactly once by its parent");
      }
      if (n.depth != p->second.depth + 1) violation("depth mismatch at node " + id.str());
    }
    if (n.depth > budget_.max_depth) violation("node " + id.str() + " deeper than max_depth");
    if (n.children.size() > static_cast<size_t>(budget_.max_children_per_node)) {
      violation("node " + id.str() + " exceeds max_children_per_node");
    }
    for (NodeId c : n.children) {
      auto child = nodes_.find(c);
      if (child == nodes_.end()) violation("node " + id.str() + " has dangling child");
      if (child->second.parent != id) violation("child " + c.str() + " disowns its parent");
    }
    if (n.finalized()) {
      if (!n.reason || text::trim(*n.reason).empty()) {
        violation("final node " + id.str() + " has no reason");
      }
      bool grounded = n.state == NodeState::kAccepted || n.state == NodeState::kRejected;
      if (n.is_leaf() && grounded && n.references.empty()) {
        violation("grounded leaf " + id.str() + " has no references");
      }
    }
  }
  // Reachability from the root; a cycle shows up as unreachable nodes or a
  // revisit.
  std::set<NodeId> seen;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) violation("cycle through node " + cur.str());
    for (NodeId c : nodes_.at(cur).children) stack.push_back(c);
  }
  if (seen.size() != nodes_.size()) violation("unreachable nodes present");
  if (next_id_ <= nodes_.rbegin()->first.value) violation("id counter behind node ids");
}

json to_json(const EvidenceRef& ref) {
  return json{{"evidence_id", ref.evidence_id}, {"span", {ref.span_begin, ref.span_end}}};
}

EvidenceRef evidence_ref_from_json(const json& j) {
  EvidenceRef ref;
  ref.evidence_id = j.at("evidence_id").get<std::string>();
  const auto& span = j.at("span");
  ref.span_begin = span.at(0).get<size_t>();
  ref.span_end = span.at(1).get<size_t>();
  if (ref.span_end < ref.span_begin) {
    throw Error(ErrorKind::kParse, "reference span is reversed");
  }
  return ref;
}

json VerificationTree::to_json() const {
  json nodes = json::object();
  for (const auto& [id, n] : nodes_) {
    json refs = json::array();
    for (const auto& r : n.references) refs.push_back(claimtree::to_json(r));
    json children = json::array();
    for (NodeId c : n.children) children.push_back(c.str());
    nodes[id.str()] = json{
        {"id", id.str()},
        {"claim", n.claim},
        {"state", std::string(to_string(n.state))},
        {"reason", n.reason ? json(*n.reason) : json(nullptr)},
        {"references", std::move(refs)},
        {"depth", n.depth},
        {"parent", n.parent ? json(n.parent->str()) : json(nullptr)},
        {"children", std::move(children)},
    };
  }
  return json{
      {"schema_version", kTreeSchemaVersion},
      {"query", query_},
      {"budget",
       {{"max_depth", budget_.max_depth},
        {"max_children_per_node", budget_.max_children_per_node},
        {"max_total_nodes", budget_.max_total_nodes}}},
      {"root", root_.str()},
      {"nodes", std::move(nodes)},
  };
}

VerificationTree VerificationTree::from_json(const json& doc) {
  VerificationTree tree;
  try {
    int version = doc.at("schema_version").get<int>();
    if (version != kTreeSchemaVersion) {
      throw Error(ErrorKind::kSchemaVersion, "tree schema_version " + std::to_string(version) +
                                                 ", expected " +
                                                 std::to_string(kTreeSchemaVersion));
    }
    tree.query_ = doc.at("query").get<std::string>();
    const auto& b = doc.at("budget");
    tree.budget_.max_depth = b.at("max_depth").get<int>();
    tree.budget_.max_children_per_node = b.at("max_children_per_node").get<int>();
    tree.budget_.max_total_nodes = b.at("max_total_nodes").get<int>();
    tree.root_ = NodeId::parse(doc.at("root").get<std::string>());
    for (const auto& [key, j] : doc.at("nodes").items()) {
      ClaimNode n;
      n.id = NodeId::parse(j.at("id").get<std::string>());
      if (n.id != NodeId::parse(key)) {
        throw Error(ErrorKind::kInvariantViolation, "node key " + key + " mismatches id");
      }
      n.claim = j.at("claim").get<std::string>();
      n.state = parse_node_state(j.at("state").get<std::string>());
      if (!j.at("reason").is_null()) n.reason = j.at("reason").get<std::string>();
      for (const auto& r : j.at("references")) n.references.push_back(evidence_ref_from_json(r));
      n.depth = j.at("depth").get<int>();
      if (!j.at("parent").is_null()) n.parent = NodeId::parse(j.at("parent").get<std::string>());
      for (const auto& c : j.at("children")) n.children.push_back(NodeId::parse(c.get<std::string>()));
      tree.nodes_.emplace(n.id, std::move(n));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed tree document: ") + e.what());
  }
  tree.next_id_ = tree.nodes_.empty() ? 0 : tree.nodes_.rbegin()->first.value + 1;
  tree.validate();
  return tree;
}

std::string VerificationTree::serialize() const { return to_json().dump(2) + "\n"; }

void save(const VerificationTree& tree, const std::filesystem::path& path) {
  tree.validate();
  write_file(path, tree.serialize());
}

VerificationTree load_tree(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return VerificationTree::from_json(doc);
}

}  // namespace claimtree
