#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <functional>

#include "claimtree/config.hpp"
#include "claimtree/engine.hpp"
#include "claimtree/error.hpp"
#include "claimtree/run_store.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"
#include "random_backend.hpp"
#include "tree_checks.hpp"

using namespace claimtree;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CLAIMTREE_FIXTURES;

class FnBackend : public Backend {
 public:
  using Fn = std::function<std::string(const PromptRequest&)>;
  explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string complete_raw(const PromptRequest& r) override {
    ++calls;
    return fn_(r);
  }
  std::atomic<int> calls{0};

 private:
  Fn fn_;
};

// Delegates to `inner` until `budget` calls have been made, then fails with a
// transport error.
class FailingAfter : public Backend {
 public:
  FailingAfter(std::shared_ptr<Backend> inner, int budget) : inner_(std::move(inner)), budget_(budget) {}
  std::string complete_raw(const PromptRequest& r) override {
    if (budget_-- <= 0) throw Error(ErrorKind::kTransport, "connection refused");
    return inner_->complete_raw(r);
  }

 private:
  std::shared_ptr<Backend> inner_;
  std::atomic<int> budget_;
};

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

struct Fixture {
  RunConfig config = RunConfig::load(kFixtures / "config.json");
  std::unique_ptr<Runtime> runtime = build_runtime(config);
};

json scenarios() { return json::parse(read_file(kFixtures / "scenarios.json")).at("scenarios"); }

Evidence ev(std::string id, std::string content, SourceTier tier = SourceTier::kPeerReviewed) {
  return Evidence{std::move(id), "corpus", tier, "title", std::move(content), 1.0, ""};
}

ClaimNode leaf(std::string claim) {
  ClaimNode n;
  n.id = NodeId{1};
  n.claim = std::move(claim);
  n.depth = 1;
  n.parent = NodeId{0};
  return n;
}

std::string verdict(std::string decision, std::vector<std::string> ids) {
  return json{{"decision", decision}, {"reason", "judged"}, {"evidence_ids", ids}}.dump();
}

// Exhaustive rule: any Rejected wins, otherwise all Accepted gives Accepted.
NodeState oracle(const std::vector<NodeState>& states) {
  size_t rejected = 0, accepted = 0;
  for (NodeState s : states) {
    rejected += s == NodeState::kRejected;
    accepted += s == NodeState::kAccepted;
  }
  if (rejected > 0) return NodeState::kRejected;
  if (accepted == states.size()) return NodeState::kAccepted;
  return NodeState::kUnsubstantiated;
}

constexpr NodeState kFinal[] = {NodeState::kAccepted, NodeState::kRejected, NodeState::kUnsubstantiated};

std::vector<std::string> corpus_vocabulary() {
  std::set<std::string> words;
  for (const auto& line : read_lines(kFixtures / "corpus.jsonl")) {
    for (auto& w : text::content_word_sequence(json::parse(line).at("body").get<std::string>())) {
      if (w.size() > 3) words.insert(w);
    }
  }
  return {words.begin(), words.end()};
}

}  // namespace

TEST(VerifyLeaf, NoEvidenceSkipsBackend) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) -> std::string {
    throw Error(ErrorKind::kTransport, "unexpected");
  });
  LlmClient client(backend);
  auto v = verify_leaf(leaf("Timolol cures glaucoma"), {}, client);
  EXPECT_EQ(v.decision, SpanDecision::kUnsubstantiated);
  EXPECT_EQ(v.reason, "no evidence retrieved");
  EXPECT_FALSE(v.backend_called);
  EXPECT_EQ(backend->calls, 0);
}

TEST(VerifyLeaf, ContradictionRejectsWithRef) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) {
    EXPECT_NE(r.prompt.find("[corpus-slt] (peer_reviewed) title\nThe effect wanes"), std::string::npos);
    return verdict("reject", {"corpus-slt", "corpus-slt"});
  });
  LlmClient client(backend);
  auto v = verify_leaf(leaf("Laser trabeculoplasty permanently cures glaucoma"),
                       {ev("corpus-slt", "The effect wanes over years."), ev("corpus-x", "unrelated")}, client);
  EXPECT_EQ(v.decision, SpanDecision::kReject);
  ASSERT_EQ(v.refs.size(), 1u);
  EXPECT_EQ(v.refs[0], (EvidenceRef{"corpus-slt", 0, 28}));
  EXPECT_TRUE(v.backend_called);
}

TEST(VerifyLeaf, UnknownIdsAreDroppedAndVerdictDowngraded) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return verdict("accept", {"corpus-ghost"}); });
  LlmClient client(backend);
  auto v = verify_leaf(leaf("claim"), {ev("corpus-a", "text")}, client);
  EXPECT_EQ(v.decision, SpanDecision::kUnsubstantiated);
  EXPECT_TRUE(v.refs.empty());
  EXPECT_EQ(v.dropped_ids, std::vector<std::string>{"corpus-ghost"});
  EXPECT_EQ(v.reason, "judged (verdict cited no retrieved evidence)");

  auto mixed = std::make_shared<FnBackend>([](const PromptRequest&) { return verdict("accept", {"corpus-ghost", "corpus-a"}); });
  LlmClient client2(mixed);
  auto v2 = verify_leaf(leaf("claim"), {ev("corpus-a", "text")}, client2);
  EXPECT_EQ(v2.decision, SpanDecision::kAccept);
  EXPECT_EQ(v2.refs.size(), 1u);
  EXPECT_EQ(v2.dropped_ids, std::vector<std::string>{"corpus-ghost"});
}

TEST(VerifyLeaf, FinalizedNodeIsRejected) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string(); });
  LlmClient client(backend);
  auto node = leaf("x");
  node.state = NodeState::kAccepted;
  EXPECT_EQ(kind_of([&] { verify_leaf(node, {}, client); }), ErrorKind::kInvalidInput);
}

TEST(Span, ProposalsAreDedupedAndExcludeTheClaim) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) {
    EXPECT_EQ(r.variables.at("parent_claim"), "(none)");
    return std::string(R"(["Drug X treats Y", "Drug X binds Z", " drug x binds z ", "Drug X lowers W"])");
  });
  LlmClient client(backend);
  auto out = propose_subclaims(leaf("Drug X treats Y"), nullptr, {}, client);
  EXPECT_EQ(out, (std::vector<std::string>{"Drug X binds Z", "Drug X lowers W"}));
}

TEST(Span, SevenProposalsCappedToFive) {
  auto tree = VerificationTree::create("q");
  auto ids = tree.add_children(tree.root(), {"claim"});
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) {
    return std::string(R"(["s1", "s2", "s3", "s4", "s5", "s6", "s7"])");
  });
  LlmClient client(backend);
  EventLog log;
  auto kids = span_subtree(tree, ids[0], {}, "no evidence retrieved", client, log);
  ASSERT_EQ(kids.size(), 5u);
  EXPECT_EQ(tree.node(kids[4]).claim, "s5");
  ASSERT_EQ(log.entries().size(), 2u);
  EXPECT_EQ(log.entries()[0].at("event"), "subclaims_capped");
  EXPECT_EQ(log.entries()[0].at("kept"), 5);
  EXPECT_EQ(log.entries()[0].at("dropped"), json({"s6", "s7"}));
  EXPECT_EQ(log.entries()[1].at("event"), "spanned");
  EXPECT_EQ(log.entries()[1].at("seq"), 1);
}

TEST(Span, NodeAtMaxDepthFinalizesUnsubstantiated) {
  auto tree = VerificationTree::create("q", SpanBudget{1, 5, 64});
  auto ids = tree.add_children(tree.root(), {"claim"});
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string(R"(["a"])"); });
  LlmClient client(backend);
  EventLog log;
  EXPECT_TRUE(span_subtree(tree, ids[0], {}, "no evidence retrieved", client, log).empty());
  EXPECT_EQ(backend->calls, 0);
  EXPECT_EQ(tree.node(ids[0]).state, NodeState::kUnsubstantiated);
  EXPECT_EQ(tree.node(ids[0]).reason, "no evidence retrieved");
  EXPECT_EQ(log.entries().back().at("cause"), "budget_exhausted");
}

TEST(Span, EmptyProposalFinalizesWithCause) {
  auto tree = VerificationTree::create("q");
  auto ids = tree.add_children(tree.root(), {"claim"});
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string("[]"); });
  LlmClient client(backend);
  EventLog log;
  EXPECT_TRUE(span_subtree(tree, ids[0], {}, "thin evidence", client, log).empty());
  EXPECT_EQ(tree.node(ids[0]).state, NodeState::kUnsubstantiated);
  EXPECT_EQ(log.entries().back().at("cause"), "no_subclaims");
}

TEST(Span, RemainingNodeBudgetLimitsChildren) {
  auto tree = VerificationTree::create("q", SpanBudget{3, 5, 4});
  auto ids = tree.add_children(tree.root(), {"claim", "other"});
  EventLog log;
  auto kids = attach_subclaims(tree, ids[0], {"a", "b", "c"}, "r", log);
  EXPECT_EQ(kids.size(), 1u);
  EXPECT_EQ(tree.size(), 4u);
  EXPECT_EQ(log.entries()[0].at("kept"), 1);
}

TEST(Consolidate, Examples) {
  using S = NodeState;
  EXPECT_EQ(consolidate_states({S::kAccepted, S::kAccepted}), S::kAccepted);
  EXPECT_EQ(consolidate_states({S::kAccepted, S::kRejected, S::kUnsubstantiated}), S::kRejected);
  EXPECT_EQ(consolidate_states({S::kAccepted, S::kUnsubstantiated}), S::kUnsubstantiated);
  EXPECT_EQ(kind_of([] { consolidate_states({}); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([] { consolidate_states({S::kAccepted, S::kVerifying}); }), ErrorKind::kInvalidInput);
}

TEST(Consolidate, AllCombinationsUpToThreeChildren) {
  size_t cases = 0;
  for (size_t n = 1; n <= 3; ++n) {
    size_t total = 1;
    for (size_t i = 0; i < n; ++i) total *= 3;
    for (size_t code = 0; code < total; ++code) {
      std::vector<NodeState> states;
      for (size_t i = 0, c = code; i < n; ++i, c /= 3) states.push_back(kFinal[c % 3]);
      ASSERT_EQ(consolidate_states(states), oracle(states));
      if (n == 3) ++cases;
    }
  }
  EXPECT_EQ(cases, 27u);
}

TEST(Consolidate, RandomLargerSets) {
  SeededRng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    std::vector<NodeState> states(4 + rng.uniform_index(20));
    for (auto& s : states) s = kFinal[rng.uniform_index(3)];
    ASSERT_EQ(consolidate_states(states), oracle(states));
  }
}

TEST(Consolidate, ScoreThresholds) {
  for (int s = 1; s <= 10; ++s) {
    NodeState expected = s <= 3 ? NodeState::kRejected : s >= 8 ? NodeState::kAccepted : NodeState::kUnsubstantiated;
    EXPECT_EQ(state_from_score(s), expected) << s;
  }
  EXPECT_EQ(kind_of([] { state_from_score(0); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([] { state_from_score(11); }), ErrorKind::kInvalidInput);
}

namespace {

VerificationTree two_child_tree(NodeState a, NodeState b) {
  auto tree = VerificationTree::create("q");
  auto ids = tree.add_children(tree.root(), {"parent claim"});
  auto kids = tree.add_children(ids[0], {"child a", "child b"});
  auto refs = [](NodeState s) {
    return s == NodeState::kUnsubstantiated ? std::vector<EvidenceRef>{} : std::vector<EvidenceRef>{{"e", 0, 1}};
  };
  tree.finalize(kids[0], a, "ra", refs(a));
  tree.finalize(kids[1], b, "rb", refs(b));
  return tree;
}

}  // namespace

TEST(Consolidate, DeterministicReasonListsChildren) {
  auto tree = two_child_tree(NodeState::kAccepted, NodeState::kUnsubstantiated);
  auto d = decide_consolidation(tree, NodeId{1}, ConsolidationMode::kDeterministic, nullptr);
  EXPECT_EQ(d.state, NodeState::kUnsubstantiated);
  EXPECT_EQ(d.reason, "not every sub-claim could be accepted [children: 2=accepted, 3=unsubstantiated]");
  EXPECT_FALSE(d.fallback);
}

TEST(Consolidate, LlmScoreAndDecision) {
  auto tree = two_child_tree(NodeState::kAccepted, NodeState::kUnsubstantiated);
  auto scored = std::make_shared<FnBackend>([](const PromptRequest& r) {
    EXPECT_NE(r.prompt.find("- [3] child b => unsubstantiated: rb"), std::string::npos);
    EXPECT_EQ(r.variables.at("parent_evidence"), "(not provided)\n");
    return std::string(R"({"score": 9, "reason": "child b is not essential", "essential_child_ids": ["2"]})");
  });
  LlmClient c1(scored);
  auto d = decide_consolidation(tree, NodeId{1}, ConsolidationMode::kLlm, &c1);
  EXPECT_EQ(d.state, NodeState::kAccepted);
  EXPECT_EQ(d.score, 9);
  EXPECT_EQ(d.essential_child_ids, std::vector<std::string>{"2"});
  EXPECT_EQ(d.reason, "child b is not essential [children: 2=accepted, 3=unsubstantiated]");

  auto decided = std::make_shared<FnBackend>([](const PromptRequest& r) {
    EXPECT_NE(r.variables.at("parent_evidence").find("[corpus-p]"), std::string::npos);
    return std::string(R"({"decision": "reject", "reason": "r", "essential_child_ids": []})");
  });
  LlmClient c2(decided);
  auto d2 = decide_consolidation(tree, NodeId{1}, ConsolidationMode::kLlm, &c2, {ev("corpus-p", "x")});
  EXPECT_EQ(d2.state, NodeState::kRejected);
  EXPECT_FALSE(d2.score.has_value());
}

TEST(Consolidate, LlmFailureFallsBackToRule) {
  auto tree = two_child_tree(NodeState::kAccepted, NodeState::kRejected);
  auto down = std::make_shared<FnBackend>([](const PromptRequest&) -> std::string {
    throw Error(ErrorKind::kTimeout, "slow");
  });
  LlmClient client(down);
  auto d = decide_consolidation(tree, NodeId{1}, ConsolidationMode::kLlm, &client);
  EXPECT_TRUE(d.fallback);
  EXPECT_EQ(d.state, NodeState::kRejected);
  EXPECT_EQ(d.reason.rfind("consolidation model unavailable, rule applied: a sub-claim was rejected", 0), 0u);

  auto garbage = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string("nope"); });
  LlmClient client2(garbage, nullptr, 1);
  EXPECT_TRUE(decide_consolidation(tree, NodeId{1}, ConsolidationMode::kLlm, &client2).fallback);
  EXPECT_EQ(garbage->calls, 2);
}

TEST(Consolidate, Guards) {
  auto tree = two_child_tree(NodeState::kAccepted, NodeState::kAccepted);
  EXPECT_EQ(kind_of([&] { decide_consolidation(tree, NodeId{2}, ConsolidationMode::kDeterministic, nullptr); }),
            ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { decide_consolidation(tree, NodeId{0}, ConsolidationMode::kDeterministic, nullptr); }),
            ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { decide_consolidation(tree, NodeId{1}, ConsolidationMode::kLlm, nullptr); }),
            ErrorKind::kInvalidInput);
  const auto& n = consolidate(tree, NodeId{1}, ConsolidationMode::kDeterministic, nullptr);
  EXPECT_EQ(n.state, NodeState::kAccepted);
}

TEST(Verifier, ConfigAndRegistryGuards) {
  Fixture f;
  EngineConfig bad = f.config.engine;
  bad.top_k = 0;
  EXPECT_EQ(kind_of([&] { Verifier(bad, *f.runtime->client, f.runtime->registry); }), ErrorKind::kInvalidInput);
  ToolRegistry empty;
  EXPECT_EQ(kind_of([&] { Verifier(f.config.engine, *f.runtime->client, empty); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(parse_consolidation_mode("deterministic"), ConsolidationMode::kDeterministic);
  EXPECT_EQ(kind_of([] { parse_consolidation_mode("vote"); }), ErrorKind::kInvalidInput);
}

TEST(Verifier, GlaucomaFixtureFourAcceptedOneRejected) {
  Fixture f;
  Verifier verifier(f.config.engine, *f.runtime->client, f.runtime->registry);
  const auto passage = text::trim(read_file(kFixtures / "glaucoma-01.txt"));
  auto run = verifier.run(passage);
  ASSERT_TRUE(run.complete) << run.error;
  EXPECT_EQ(testkit::check_finished_run(run), "");
  auto result = run.result();
  ASSERT_EQ(result.claims.size(), 5u);
  std::vector<NodeState> states;
  for (const auto& c : result.claims) states.push_back(c.state);
  using S = NodeState;
  EXPECT_EQ(states, (std::vector<S>{S::kAccepted, S::kAccepted, S::kAccepted, S::kAccepted, S::kRejected}));
  EXPECT_EQ(result.claims[4].references.front().evidence_id, "corpus-slt-trial");

  // The mechanism claim is split into two scripted sub-claims.
  const auto& mechanism = run.tree.node(result.claims[2].node_id);
  EXPECT_EQ(mechanism.children.size(), 2u);
  for (NodeId c : mechanism.children) EXPECT_EQ(run.tree.node(c).state, S::kAccepted);
  EXPECT_NE(mechanism.reason->find("[children: "), std::string::npos);
  EXPECT_FALSE(mechanism.references.empty());
  EXPECT_EQ(run.tree.node(run.tree.root()).state, S::kRejected);
  EXPECT_EQ(run.events.entries().back().at("event"), "run_completed");
}

TEST(Verifier, AllScenariosReproduceExpectedVerdicts) {
  Fixture f;
  Verifier verifier(f.config.engine, *f.runtime->client, f.runtime->registry);
  std::map<std::string, int> per_category;
  for (const auto& s : scenarios()) {
    auto run = verifier.run(s.at("text").get<std::string>());
    ASSERT_TRUE(run.complete) << s.at("id") << ": " << run.error;
    ASSERT_EQ(testkit::check_finished_run(run), "") << s.at("id");
    auto result = run.result();
    ASSERT_EQ(result.claims.size(), s.at("claims").size()) << s.at("id");
    for (size_t i = 0; i < result.claims.size(); ++i) {
      EXPECT_EQ(result.claims[i].claim, s.at("claims")[i].at("text"));
      EXPECT_EQ(std::string(to_string(result.claims[i].state)), s.at("claims")[i].at("expect"))
          << s.at("id") << " claim " << i;
    }
    ++per_category[s.at("category").get<std::string>()];
  }
  EXPECT_EQ(per_category.size(), 6u);
  for (const auto& [cat, n] : per_category) EXPECT_EQ(n, 2) << cat;
}

TEST(Verifier, NoEvidenceAtMaxDepthOneIsUnsubstantiated) {
  Fixture f;
  EngineConfig cfg = f.config.engine;
  cfg.budget.max_depth = 1;
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) -> std::string {
    if (r.role == PromptRole::kQuery) return R"({"tool_id": "corpus", "query": "zebrafish telomere xylophone"})";
    if (r.role == PromptRole::kConsolidate) return R"({"decision": "unsubstantiated", "reason": "r", "essential_child_ids": []})";
    throw Error(ErrorKind::kTransport, "unexpected role " + std::string(to_string(r.role)));
  });
  LlmClient client(backend);
  Verifier verifier(cfg, client, f.runtime->registry);
  auto run = verifier.run("passage", std::vector<std::string>{"Zebrafish telomeres hum like xylophones."});
  ASSERT_TRUE(run.complete) << run.error;
  auto result = run.result();
  ASSERT_EQ(result.claims.size(), 1u);
  EXPECT_EQ(result.claims[0].state, NodeState::kUnsubstantiated);
  EXPECT_EQ(result.claims[0].reason, "no evidence retrieved");
  EXPECT_EQ(run.tree.size(), 2u);
  bool saw_budget = false;
  for (const auto& e : run.events.entries()) {
    if (e.at("event") == "node_finalized") saw_budget = e.at("cause") == "budget_exhausted";
  }
  EXPECT_TRUE(saw_budget);
}

TEST(Verifier, ToolFailureIsLoggedAndExtraClaimsTruncated) {
  Fixture f;
  EngineConfig cfg = f.config.engine;
  cfg.budget.max_depth = 1;
  cfg.consolidation = ConsolidationMode::kDeterministic;
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) -> std::string {
    if (r.role == PromptRole::kQuery) return R"({"tool_id": "calc", "query": "1 / 0"})";
    throw Error(ErrorKind::kTransport, "unexpected role");
  });
  LlmClient client(backend);
  Verifier verifier(cfg, client, f.runtime->registry);
  std::vector<std::string> claims{"a", "b", "c", "d", "e", "f", "g"};
  auto run = verifier.run("passage", claims);
  ASSERT_TRUE(run.complete) << run.error;
  EXPECT_EQ(run.result().claims.size(), 5u);
  EXPECT_EQ(run.truncated_claims, (std::vector<std::string>{"f", "g"}));
  size_t failures = 0;
  for (const auto& e : run.events.entries()) failures += e.at("event") == "tool_failed";
  EXPECT_EQ(failures, 5u);
  for (const auto& c : run.result().claims) EXPECT_EQ(c.state, NodeState::kUnsubstantiated);
  EXPECT_EQ(run.tree.node(run.tree.root()).state, NodeState::kUnsubstantiated);
  EXPECT_EQ(testkit::check_finished_run(run), "");
}

TEST(Verifier, EmptyExtractionFinalizesRoot) {
  Fixture f;
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string("[]"); });
  LlmClient client(backend);
  Verifier verifier(f.config.engine, client, f.runtime->registry);
  auto run = verifier.run("Nothing to check here.");
  ASSERT_TRUE(run.complete);
  EXPECT_EQ(run.tree.size(), 1u);
  EXPECT_EQ(run.tree.node(run.tree.root()).state, NodeState::kUnsubstantiated);
  EXPECT_EQ(run.tree.node(run.tree.root()).reason, "no verifiable claims extracted");
}

TEST(Verifier, RunsAreDeterministicAcrossJobCounts) {
  Fixture f;
  std::vector<std::string> trees, logs;
  for (int jobs : {1, 1, 4}) {
    EngineConfig cfg = f.config.engine;
    cfg.jobs = jobs;
    Verifier verifier(cfg, *f.runtime->client, f.runtime->registry);
    std::string all_trees, all_logs;
    for (const auto& s : scenarios()) {
      auto run = verifier.run(s.at("text").get<std::string>());
      all_trees += run.tree.serialize();
      for (const auto& e : run.events.entries()) all_logs += e.dump() + "\n";
    }
    trees.push_back(all_trees);
    logs.push_back(all_logs);
  }
  EXPECT_EQ(trees[0], trees[1]);
  EXPECT_EQ(trees[0], trees[2]);
  EXPECT_EQ(logs[0], logs[2]);
}

TEST(Verifier, InterruptedRunResumesToTheSameTree) {
  Fixture f;
  Verifier full_verifier(f.config.engine, *f.runtime->client, f.runtime->registry);
  const auto passage = text::trim(read_file(kFixtures / "glaucoma-01.txt"));
  const auto full = full_verifier.run(passage);
  ASSERT_TRUE(full.complete);

  const fs::path dir = fs::temp_directory_path() / "claimtree_resume_test";
  for (int budget : {0, 3, 9, 14, 20}) {
    auto failing = std::make_shared<FailingAfter>(f.runtime->backend, budget);
    LlmClient flaky(failing);
    Verifier verifier(f.config.engine, flaky, f.runtime->registry);
    auto partial = verifier.run(passage);
    ASSERT_FALSE(partial.complete) << budget;
    EXPECT_NE(partial.error.find("connection refused"), std::string::npos);
    EXPECT_EQ(partial.events.entries().back().at("event"), "run_interrupted");
    ASSERT_NO_THROW(partial.tree.validate());

    // Through disk, as the CLI does it.
    fs::remove_all(dir);
    persist_run(dir, json::object(), partial, RunMeta{"glaucoma-01", "Treatment"});
    auto report = load_report(dir);
    EXPECT_EQ(report.at("status"), "partial");
    const std::string token = report.at("resume_token");
    EXPECT_EQ(token, resume_token(partial.tree));
    EXPECT_EQ(kind_of([&] { load_run(dir, "tree-0000"); }), ErrorKind::kInvalidInput);
    auto loaded = load_run(dir, token);
    EXPECT_EQ(loaded.tree, partial.tree);
    EXPECT_EQ(loaded.own_refs, partial.own_refs);

    auto resumed = full_verifier.resume(std::move(loaded));
    ASSERT_TRUE(resumed.complete) << resumed.error;
    EXPECT_EQ(resumed.tree.serialize(), full.tree.serialize()) << "budget " << budget;
    EXPECT_EQ(resumed.evidence.items(), full.evidence.items());
  }
  fs::remove_all(dir);
}

TEST(Verifier, ResumeOfCompleteRunIsANoOp) {
  Fixture f;
  Verifier verifier(f.config.engine, *f.runtime->client, f.runtime->registry);
  auto run = verifier.run(text::trim(read_file(kFixtures / "glaucoma-01.txt")));
  const auto events = run.events.entries().size();
  auto again = verifier.resume(run);
  EXPECT_EQ(again.events.entries().size(), events);
  EXPECT_EQ(again.tree, run.tree);
}

TEST(Verifier, PersistedRunRoundTrips) {
  Fixture f;
  Verifier verifier(f.config.engine, *f.runtime->client, f.runtime->registry);
  auto run = verifier.run(text::trim(read_file(kFixtures / "glaucoma-01.txt")));
  const fs::path dir = fs::temp_directory_path() / "claimtree_persist_test";
  fs::remove_all(dir);
  persist_run(dir, json{{"k", 1}}, run, RunMeta{"glaucoma-01", "Treatment"});
  auto report = load_report(dir);
  EXPECT_EQ(report.at("status"), "complete");
  EXPECT_TRUE(report.at("resume_token").is_null());
  EXPECT_EQ(report.at("counts").at("accepted"), 4);
  EXPECT_EQ(report.at("counts").at("rejected"), 1);
  EXPECT_EQ(report.at("root_state"), "rejected");
  EXPECT_EQ(load_run_config(dir), json({{"k", 1}}));
  auto loaded = load_run(dir);
  EXPECT_EQ(loaded.tree, run.tree);
  EXPECT_TRUE(loaded.complete);
  EXPECT_EQ(loaded.evidence.items(), run.evidence.items());
  EXPECT_EQ(loaded.events.entries(), run.events.entries());

  // Golden run directory written by the fixture author.
  const fs::path golden = kFixtures / "golden" / "glaucoma-01.run";
  EXPECT_EQ(read_file(dir / "tree.json"), read_file(golden / "tree.json"));
  EXPECT_EQ(read_file(dir / "report.json"), read_file(golden / "report.json"));
  EXPECT_EQ(read_file(dir / "events.log"), read_file(golden / "events.log"));
  fs::remove_all(dir);
}

TEST(VerifierProperty, RandomBackendRunsKeepInvariants) {
  Fixture f;
  const auto vocab = corpus_vocabulary();
  int deepest = 0;
  size_t grounded = 0, capped = 0;
  for (uint64_t seed = 0; seed < 150; ++seed) {
    auto backend = std::make_shared<testkit::RandomBackend>(seed, std::vector<std::string>{"corpus", "calc"}, vocab);
    LlmClient client(backend);
    EngineConfig cfg = f.config.engine;
    SeededRng rng(seed);
    cfg.budget = SpanBudget{1 + static_cast<int>(rng.uniform_index(3)), 1 + static_cast<int>(rng.uniform_index(5)),
                            2 + static_cast<int>(rng.uniform_index(63))};
    cfg.consolidation = seed % 2 ? ConsolidationMode::kLlm : ConsolidationMode::kDeterministic;
    Verifier verifier(cfg, client, f.runtime->registry);
    auto run = verifier.run(testkit::RandomBackend::passage(seed, vocab, 60));
    ASSERT_TRUE(run.complete) << seed << ": " << run.error;
    ASSERT_EQ(testkit::check_finished_run(run), "") << "seed " << seed;
    for (const auto& [id, n] : run.tree.nodes()) {
      deepest = std::max(deepest, n.depth);
      grounded += n.is_leaf() && n.state != NodeState::kUnsubstantiated;
    }
    for (const auto& e : run.events.entries()) capped += e.at("event") == "subclaims_capped";
  }
  // The generator must reach the interesting shapes.
  EXPECT_GE(deepest, 3);
  EXPECT_GT(grounded, 50);
  EXPECT_GT(capped, 0);
}
