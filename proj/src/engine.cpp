#include "claimtree/engine.hpp"

#include <algorithm>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/parallel.hpp"
#include "claimtree/text.hpp"

namespace claimtree {
namespace {

std::string render_evidence(const std::vector<Evidence>& evidence) {
  if (evidence.empty()) return "(none)\n";
  std::string out;
  for (const auto& e : evidence) {
    out += "[" + e.id + "] (" + std::string(to_string(e.tier)) + ") " + e.title + "\n" +
           e.content + "\n\n";
  }
  return out;
}

std::string child_summary(const VerificationTree& tree, const ClaimNode& node) {
  std::vector<std::string> parts;
  for (NodeId c : node.children) {
    parts.push_back(c.str() + "=" + std::string(to_string(tree.node(c).state)));
  }
  return "[children: " + text::join(parts, ", ") + "]";
}

EvidenceRef full_ref(const Evidence& e) { return EvidenceRef{e.id, 0, e.content.size()}; }

json ref_ids(const std::vector<EvidenceRef>& refs) {
  json ids = json::array();
  for (const auto& r : refs) ids.push_back(r.evidence_id);
  return ids;
}

// Everything computed for one frontier node before the tree is touched.
struct LeafWork {
  QueryPlan plan;
  std::optional<std::string> tool_error;
  std::vector<Evidence> evidence;
  LeafVerdict verdict;
  bool asked_span = false;
  std::vector<std::string> proposals;
};

}  // namespace

std::string_view to_string(SpanDecision decision) {
  switch (decision) {
    case SpanDecision::kAccept: return "accept";
    case SpanDecision::kReject: return "reject";
    case SpanDecision::kUnsubstantiated: return "unsubstantiated";
  }
  return "unsubstantiated";
}

SpanDecision parse_span_decision(std::string_view name) {
  if (name == "accept") return SpanDecision::kAccept;
  if (name == "reject") return SpanDecision::kReject;
  if (name == "unsubstantiated") return SpanDecision::kUnsubstantiated;
  throw Error(ErrorKind::kParse, "unknown decision '" + std::string(name) + "'");
}

NodeState to_node_state(SpanDecision decision) {
  switch (decision) {
    case SpanDecision::kAccept: return NodeState::kAccepted;
    case SpanDecision::kReject: return NodeState::kRejected;
    case SpanDecision::kUnsubstantiated: return NodeState::kUnsubstantiated;
  }
  return NodeState::kUnsubstantiated;
}

std::string_view to_string(ConsolidationMode mode) {
  return mode == ConsolidationMode::kLlm ? "llm" : "deterministic";
}

ConsolidationMode parse_consolidation_mode(std::string_view name) {
  if (name == "llm") return ConsolidationMode::kLlm;
  if (name == "deterministic") return ConsolidationMode::kDeterministic;
  throw Error(ErrorKind::kInvalidInput, "unknown consolidation mode '" + std::string(name) + "'");
}

void EngineConfig::validate() const {
  budget.validate();
  if (max_results < 1) throw Error(ErrorKind::kInvalidInput, "max_results must be >= 1");
  if (top_k < 1) throw Error(ErrorKind::kInvalidInput, "top_k must be >= 1");
  if (jobs < 1) throw Error(ErrorKind::kInvalidInput, "jobs must be >= 1");
}

// ---------------------------------------------------------------------------
// Leaf verification and spanning

LeafVerdict verify_leaf(const ClaimNode& node, const std::vector<Evidence>& evidence,
                        const LlmClient& client) {
  if (node.finalized()) {
    throw Error(ErrorKind::kInvalidInput, "node " + node.id.str() + " is already final");
  }
  LeafVerdict verdict;
  if (evidence.empty()) {
    verdict.reason = std::string(kNoEvidenceReason);
    return verdict;
  }
  json response = client.complete(PromptRole::kVerifyLeaf,
                                  {{"claim", node.claim}, {"evidence", render_evidence(evidence)}});
  verdict.backend_called = true;
  verdict.decision = parse_span_decision(response["decision"].get<std::string>());
  verdict.reason = text::trim(response["reason"].get<std::string>());
  std::set<std::string> cited;
  for (const auto& id_json : response["evidence_ids"]) {
    auto id = id_json.get<std::string>();
    auto it = std::find_if(evidence.begin(), evidence.end(),
                           [&](const Evidence& e) { return e.id == id; });
    if (it == evidence.end()) {
      verdict.dropped_ids.push_back(id);
    } else if (cited.insert(id).second) {
      verdict.refs.push_back(full_ref(*it));
    }
  }
  if (verdict.decision != SpanDecision::kUnsubstantiated && verdict.refs.empty()) {
    verdict.decision = SpanDecision::kUnsubstantiated;
    verdict.reason += " (verdict cited no retrieved evidence)";
  }
  return verdict;
}

std::vector<std::string> propose_subclaims(const ClaimNode& node, const ClaimNode* parent,
                                           const std::vector<Evidence>& evidence,
                                           const LlmClient& client) {
  json response = client.complete(
      PromptRole::kSpan, {{"claim", node.claim},
                          {"parent_claim", parent ? parent->claim : std::string("(none)")},
                          {"decision", std::string(to_string(SpanDecision::kUnsubstantiated))},
                          {"evidence", render_evidence(evidence)}});
  std::vector<std::string> out;
  std::set<std::string> seen{text::normalize_claim(node.claim)};
  for (const auto& item : response) {
    auto claim = text::trim(item.get<std::string>());
    if (seen.insert(text::normalize_claim(claim)).second) out.push_back(std::move(claim));
  }
  return out;
}

void EventLog::add(std::string_view event, json fields) {
  fields["seq"] = entries_.size();
  fields["event"] = std::string(event);
  entries_.push_back(std::move(fields));
}

std::vector<NodeId> attach_subclaims(VerificationTree& tree, NodeId node_id,
                                     std::vector<std::string> proposals,
                                     std::string_view fallback_reason, EventLog& log) {
  const ClaimNode& node = tree.node(node_id);
  const auto& budget = tree.budget();
  size_t allowed = 0;
  if (node.depth < budget.max_depth) {
    allowed = std::min<size_t>(budget.max_children_per_node - node.children.size(),
                               static_cast<size_t>(std::max(tree.remaining_capacity(), 0)));
  }
  if (proposals.size() > allowed) {
    json dropped(std::vector<std::string>(proposals.begin() + static_cast<long>(allowed), proposals.end()));
    log.add("subclaims_capped", {{"node", node_id.str()},
                                 {"proposed", proposals.size()},
                                 {"kept", allowed},
                                 {"dropped", std::move(dropped)}});
    proposals.resize(allowed);
  }
  if (proposals.empty()) {
    tree.finalize(node_id, NodeState::kUnsubstantiated, std::string(fallback_reason), {});
    log.add("node_finalized", {{"node", node_id.str()}, {"state", "unsubstantiated"},
                               {"cause", allowed == 0 ? "budget_exhausted" : "no_subclaims"}});
    return {};
  }
  auto ids = tree.add_children(node_id, proposals);
  json children = json::array();
  for (NodeId id : ids) children.push_back(id.str());
  log.add("spanned", {{"node", node_id.str()}, {"children", std::move(children)}});
  return ids;
}

std::vector<NodeId> span_subtree(VerificationTree& tree, NodeId node_id,
                                 const std::vector<Evidence>& evidence,
                                 std::string_view leaf_reason, const LlmClient& client,
                                 EventLog& log) {
  const ClaimNode& node = tree.node(node_id);
  if (node.finalized()) {
    throw Error(ErrorKind::kInvalidInput, "node " + node_id.str() + " is already final");
  }
  std::vector<std::string> proposals;
  if (node.depth < tree.budget().max_depth && tree.remaining_capacity() > 0) {
    const ClaimNode* parent = node.parent ? &tree.node(*node.parent) : nullptr;
    proposals = propose_subclaims(node, parent, evidence, client);
  }
  return attach_subclaims(tree, node_id, std::move(proposals), leaf_reason, log);
}

// ---------------------------------------------------------------------------
// Consolidation

NodeState consolidate_states(const std::vector<NodeState>& children) {
  if (children.empty()) throw Error(ErrorKind::kInvalidInput, "no child states to consolidate");
  bool all_accepted = true;
  for (NodeState s : children) {
    if (s == NodeState::kVerifying) {
      throw Error(ErrorKind::kInvalidInput, "cannot consolidate a verifying child");
    }
    if (s == NodeState::kRejected) return NodeState::kRejected;
    all_accepted = all_accepted && s == NodeState::kAccepted;
  }
  return all_accepted ? NodeState::kAccepted : NodeState::kUnsubstantiated;
}

NodeState state_from_score(int score) {
  if (score < 1 || score > 10) throw Error(ErrorKind::kInvalidInput, "score outside 1..10");
  if (score <= 3) return NodeState::kRejected;
  if (score >= 8) return NodeState::kAccepted;
  return NodeState::kUnsubstantiated;
}

ConsolidationDecision decide_consolidation(const VerificationTree& tree, NodeId node_id,
                                           ConsolidationMode mode, const LlmClient* client,
                                           const std::vector<Evidence>& own_evidence) {
  const ClaimNode& node = tree.node(node_id);
  if (node.finalized()) {
    throw Error(ErrorKind::kInvalidInput, "node " + node_id.str() + " is already final");
  }
  if (node.children.empty()) {
    throw Error(ErrorKind::kInvalidInput, "node " + node_id.str() + " has no children");
  }
  std::vector<NodeState> states;
  for (NodeId c : node.children) states.push_back(tree.node(c).state);
  if (std::any_of(states.begin(), states.end(),
                  [](NodeState s) { return s == NodeState::kVerifying; })) {
    throw Error(ErrorKind::kInvalidInput,
                "node " + node_id.str() + " still has verifying children");
  }
  const std::string summary = child_summary(tree, node);

  ConsolidationDecision decision;
  if (mode == ConsolidationMode::kLlm) {
    if (!client) throw Error(ErrorKind::kInvalidInput, "llm consolidation needs a client");
    std::string children;
    for (NodeId c : node.children) {
      const ClaimNode& child = tree.node(c);
      children += "- [" + c.str() + "] " + child.claim + " => " +
                  std::string(to_string(child.state)) + ": " + child.reason.value_or("") + "\n";
    }
    try {
      json response = client->complete(
          PromptRole::kConsolidate,
          {{"claim", node.claim},
           {"children", children},
           {"parent_evidence", own_evidence.empty() ? std::string("(not provided)\n")
                                                    : render_evidence(own_evidence)}});
      if (response.contains("score")) {
        decision.score = response["score"].get<int>();
        decision.state = state_from_score(*decision.score);
      } else {
        decision.state = to_node_state(parse_span_decision(response["decision"].get<std::string>()));
      }
      decision.essential_child_ids = response["essential_child_ids"].get<std::vector<std::string>>();
      decision.reason = text::trim(response["reason"].get<std::string>()) + " " + summary;
      return decision;
    } catch (const Error& e) {
      if (!e.is_backend_failure()) throw;
      decision.fallback = true;
    }
  }

  decision.state = consolidate_states(states);
  std::string why;
  switch (decision.state) {
    case NodeState::kAccepted: why = "all sub-claims accepted"; break;
    case NodeState::kRejected: why = "a sub-claim was rejected"; break;
    default: why = "not every sub-claim could be accepted"; break;
  }
  if (decision.fallback) why = "consolidation model unavailable, rule applied: " + why;
  decision.reason = why + " " + summary;
  return decision;
}

const ClaimNode& consolidate(VerificationTree& tree, NodeId node, ConsolidationMode mode,
                             const LlmClient* client, std::vector<EvidenceRef> refs,
                             const std::vector<Evidence>& own_evidence) {
  auto decision = decide_consolidation(tree, node, mode, client, own_evidence);
  return tree.finalize(node, decision.state, std::move(decision.reason), std::move(refs));
}

const Evidence& EvidenceStore::get(std::string_view id) const {
  auto it = items_.find(std::string(id));
  if (it == items_.end()) throw Error(ErrorKind::kUnknownNode, "no evidence '" + std::string(id) + "'");
  return it->second;
}

VerifiedClaimSet VerificationRun::result() const {
  VerifiedClaimSet set{{}, tree};
  for (NodeId id : tree.node(tree.root()).children) {
    const ClaimNode& n = tree.node(id);
    set.claims.push_back(VerifiedClaim{id, n.claim, n.state, n.reason.value_or(""), n.references});
  }
  return set;
}

// ---------------------------------------------------------------------------
// Orchestration

Verifier::Verifier(EngineConfig config, const LlmClient& client, const ToolRegistry& registry)
    : config_(std::move(config)), client_(client), registry_(registry) {
  config_.validate();
  if (registry_.empty()) throw Error(ErrorKind::kInvalidInput, "tool registry is empty");
}

VerificationRun Verifier::run(std::string_view query,
                              const std::optional<std::vector<std::string>>& fixed_claims) const {
  VerificationRun run{VerificationTree::create(query, config_.budget), {}, {}, {}, {}, false, {}};
  advance(run, fixed_claims);
  return run;
}

VerificationRun Verifier::resume(VerificationRun partial,
                                 const std::optional<std::vector<std::string>>& fixed_claims) const {
  partial.tree.validate();
  if (partial.complete) return partial;
  partial.events.add("run_resumed");
  advance(partial, fixed_claims);
  return partial;
}

void Verifier::advance(VerificationRun& run,
                       const std::optional<std::vector<std::string>>& fixed_claims) const {
  try {
    seed_claims(run, fixed_claims);
    expand(run);
    consolidate_all(run);
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
    run.complete = false;
    run.error = e.what();
    run.events.add("run_interrupted", {{"error", run.error}});
    return;
  }
  run.tree.validate();
  if (!run.tree.fully_finalized()) {
    throw Error(ErrorKind::kInvariantViolation, "run finished with verifying nodes");
  }
  run.complete = true;
  run.error.clear();
  run.events.add("run_completed", {{"nodes", run.tree.size()}});
}

void Verifier::seed_claims(VerificationRun& run,
                           const std::optional<std::vector<std::string>>& fixed_claims) const {
  VerificationTree& tree = run.tree;
  const ClaimNode& root = tree.node(tree.root());
  if (root.finalized() || !root.children.empty()) return;

  std::vector<std::string> claims;
  if (fixed_claims) {
    for (const auto& c : *fixed_claims) {
      if (!text::trim(c).empty()) claims.push_back(text::trim(c));
    }
  } else {
    for (auto& c : extract_claims(tree.query(), config_.strategy, client_)) {
      claims.push_back(std::move(c.text));
    }
  }
  run.events.add("claims_extracted",
                 {{"source", fixed_claims ? "fixed" : std::string(to_string(config_.strategy))},
                  {"claims", claims}});
  if (claims.empty()) {
    tree.finalize(tree.root(), NodeState::kUnsubstantiated, "no verifiable claims extracted", {});
    return;
  }
  size_t cap = std::min<size_t>(config_.budget.max_children_per_node,
                                static_cast<size_t>(std::max(tree.remaining_capacity(), 0)));
  if (claims.size() > cap) {
    run.truncated_claims.assign(claims.begin() + static_cast<long>(cap), claims.end());
    run.events.add("claims_truncated", {{"kept", cap}, {"dropped", run.truncated_claims}});
    claims.resize(cap);
  }
  tree.add_children(tree.root(), claims);
}

void Verifier::expand(VerificationRun& run) const {
  VerificationTree& tree = run.tree;
  auto frontier_of = [&tree] {
    std::vector<NodeId> frontier;
    for (const auto& [id, n] : tree.nodes()) {
      if (n.depth >= 1 && !n.finalized() && n.is_leaf()) frontier.push_back(id);
    }
    return frontier;
  };

  for (auto frontier = frontier_of(); !frontier.empty(); frontier = frontier_of()) {
    const bool capacity_left = tree.remaining_capacity() > 0;
    std::vector<LeafWork> work(frontier.size());
    parallel_for(frontier.size(), config_.jobs, [&](size_t i) {
      const ClaimNode& node = tree.node(frontier[i]);
      const ClaimNode* parent = node.parent ? &tree.node(*node.parent) : nullptr;
      LeafWork& w = work[i];
      w.plan = plan_query(node, parent, registry_, client_);
      std::vector<RawDocument> docs;
      try {
        docs = registry_.execute(w.plan, config_.max_results);
      } catch (const Error& e) {
        bool tool_failure = e.kind() == ErrorKind::kEvidenceUnavailable ||
                            e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kTimeout;
        if (!tool_failure) throw;
        w.tool_error = e.what();
      }
      w.evidence = rerank(docs, node.claim, config_.top_k);
      w.verdict = verify_leaf(node, w.evidence, client_);
      if (w.verdict.decision == SpanDecision::kUnsubstantiated &&
          node.depth < config_.budget.max_depth && capacity_left) {
        w.asked_span = true;
        w.proposals = propose_subclaims(node, parent, w.evidence, client_);
      }
    });

    for (size_t i = 0; i < frontier.size(); ++i) {
      const NodeId id = frontier[i];
      LeafWork& w = work[i];
      run.events.add("query_planned", {{"node", id.str()},
                                       {"tool", w.plan.tool_id},
                                       {"query", w.plan.query},
                                       {"fallback", w.plan.fallback}});
      if (w.tool_error) {
        run.events.add("tool_failed", {{"node", id.str()}, {"tool", w.plan.tool_id}, {"error", *w.tool_error}});
      }
      std::vector<EvidenceRef> own;
      for (const auto& e : w.evidence) {
        run.evidence.add(e);
        own.push_back(full_ref(e));
      }
      run.own_refs[id] = own;
      run.events.add("leaf_verified", {{"node", id.str()},
                                       {"decision", std::string(to_string(w.verdict.decision))},
                                       {"evidence_ids", ref_ids(own)},
                                       {"cited_ids", ref_ids(w.verdict.refs)},
                                       {"dropped_ids", w.verdict.dropped_ids},
                                       {"backend_called", w.verdict.backend_called}});
      if (w.verdict.decision != SpanDecision::kUnsubstantiated) {
        tree.finalize(id, to_node_state(w.verdict.decision), w.verdict.reason, w.verdict.refs);
        continue;
      }
      if (!w.asked_span) {
        tree.finalize(id, NodeState::kUnsubstantiated, w.verdict.reason, w.verdict.refs);
        run.events.add("node_finalized", {{"node", id.str()},
                                          {"state", "unsubstantiated"},
                                          {"cause", "budget_exhausted"}});
        continue;
      }
      attach_subclaims(tree, id, std::move(w.proposals), w.verdict.reason, run.events);
    }
  }
}

void Verifier::consolidate_all(VerificationRun& run) const {
  VerificationTree& tree = run.tree;
  for (auto ready = tree.consolidation_ready(); !ready.empty(); ready = tree.consolidation_ready()) {
    const int depth = tree.node(ready.front()).depth;
    std::vector<NodeId> batch;
    for (NodeId id : ready) {
      if (tree.node(id).depth == depth) batch.push_back(id);
    }
    std::vector<ConsolidationDecision> decisions(batch.size());
    parallel_for(batch.size(), config_.jobs, [&](size_t i) {
      std::vector<Evidence> own_evidence;
      if (config_.consolidate_with_parent_evidence) {
        auto it = run.own_refs.find(batch[i]);
        if (it != run.own_refs.end()) {
          for (const auto& ref : it->second) own_evidence.push_back(run.evidence.get(ref.evidence_id));
        }
      }
      decisions[i] = decide_consolidation(tree, batch[i], config_.consolidation, &client_, own_evidence);
    });
    for (size_t i = 0; i < batch.size(); ++i) {
      auto& d = decisions[i];
      std::vector<EvidenceRef> refs;
      if (auto it = run.own_refs.find(batch[i]); it != run.own_refs.end()) refs = it->second;
      json fields{{"node", batch[i].str()},
                  {"state", std::string(to_string(d.state))},
                  {"mode", std::string(to_string(config_.consolidation))},
                  {"fallback", d.fallback},
                  {"essential_child_ids", d.essential_child_ids}};
      if (d.score) fields["score"] = *d.score;
      tree.finalize(batch[i], d.state, std::move(d.reason), std::move(refs));
      run.events.add("consolidated", std::move(fields));
    }
  }
}

}  // namespace claimtree
