#include <gtest/gtest.h>

#include <functional>

#include "claimtree/config.hpp"
#include "claimtree/error.hpp"
#include "claimtree/extract.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

using namespace claimtree;
namespace fs = std::filesystem;

namespace {

class FnBackend : public Backend {
 public:
  using Fn = std::function<std::string(const PromptRequest&)>;
  explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string complete_raw(const PromptRequest& request) override {
    calls.push_back(request);
    return fn_(request);
  }
  std::vector<PromptRequest> calls;

 private:
  Fn fn_;
};

size_t count_role(const std::vector<PromptRequest>& calls, PromptRole role) {
  return static_cast<size_t>(std::count_if(calls.begin(), calls.end(),
                                           [&](const PromptRequest& r) { return r.role == role; }));
}

std::string echo_claim(const PromptRequest& r) {
  return json{{"text", r.variables.at("claim")}}.dump();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

}  // namespace

TEST(Extract, StrategyNames) {
  EXPECT_EQ(parse_extraction_strategy("ATOMIC"), ExtractionStrategy::kAtomic);
  EXPECT_EQ(parse_extraction_strategy("med_decontext"), ExtractionStrategy::kMedDecontext);
  EXPECT_EQ(to_string(ExtractionStrategy::kDecontext), "decontext");
  EXPECT_EQ(kind_of([] { parse_extraction_strategy("holistic"); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(prompt_template_id(ExtractionStrategy::kMedDecontext), "generate.med_decontext.v1");
}

TEST(Extract, EmptyPassageMakesNoCall) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) -> std::string {
    throw Error(ErrorKind::kTransport, "unexpected call");
  });
  LlmClient client(backend);
  EXPECT_TRUE(extract_claims("", ExtractionStrategy::kMedDecontext, client).empty());
  EXPECT_TRUE(extract_claims(" \n ", ExtractionStrategy::kAtomic, client).empty());
  EXPECT_TRUE(backend->calls.empty());
}

TEST(Extract, FixturePassageReplaysGoldenClaims) {
  auto cfg = RunConfig::load(fs::path(CLAIMTREE_FIXTURES) / "config.json");
  auto runtime = build_runtime(cfg);
  const std::string passage = text::trim(read_file(fs::path(CLAIMTREE_FIXTURES) / "glaucoma-01.txt"));
  auto claims = extract_claims(passage, cfg.engine.strategy, *runtime->client);
  auto golden = read_lines(fs::path(CLAIMTREE_FIXTURES) / "golden" / "glaucoma-01.claims.jsonl");
  ASSERT_EQ(claims.size(), 5u);
  ASSERT_EQ(golden.size(), 5u);
  for (size_t i = 0; i < claims.size(); ++i) {
    auto g = json::parse(golden[i]);
    EXPECT_EQ(claims[i].text, g.at("text"));
    EXPECT_EQ(claims[i].span_start, g.at("span_start"));
    EXPECT_EQ(claims[i].span_end, g.at("span_end"));
    EXPECT_TRUE(claims[i].self_contained);
  }
}

TEST(Extract, IdenticalClaimsAreDeduplicated) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) -> std::string {
    if (r.role == PromptRole::kGenerate) {
      return R"([{"text": "Timolol lowers IOP", "span_start": 0, "span_end": 10},
                 {"text": "timolol  lowers iop", "span_start": 20, "span_end": 30}])";
    }
    return echo_claim(r);
  });
  LlmClient client(backend);
  auto claims = extract_claims("Timolol lowers IOP. Timolol lowers IOP again.", ExtractionStrategy::kAtomic, client);
  ASSERT_EQ(claims.size(), 1u);
  EXPECT_EQ(claims[0].text, "Timolol lowers IOP");
  EXPECT_FALSE(claims[0].self_contained);
  EXPECT_EQ(count_role(backend->calls, PromptRole::kDecontextualize), 0u);
}

TEST(Extract, SpanOverlapIsSharedOverLongest) {
  ExtractedClaim a{"a", 0, 10, false};
  ExtractedClaim b{"b", 5, 25, false};
  EXPECT_DOUBLE_EQ(span_overlap(a, b), 5.0 / 20.0);
  EXPECT_DOUBLE_EQ(span_overlap(a, a), 1.0);
  EXPECT_DOUBLE_EQ(span_overlap(a, ExtractedClaim{"c", 10, 20, false}), 0.0);
  EXPECT_DOUBLE_EQ(span_overlap(ExtractedClaim{"e", 3, 3, false}, ExtractedClaim{"f", 3, 3, false}), 0.0);
}

TEST(Extract, RestatementsOfTheSameSpanAreDropped) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) -> std::string {
    return R"([{"text": "B claim", "span_start": 40, "span_end": 60},
               {"text": "A claim", "span_start": 0, "span_end": 20},
               {"text": "A restated", "span_start": 1, "span_end": 20},
               {"text": "A partial", "span_start": 10, "span_end": 30}])";
  });
  LlmClient client(backend);
  auto claims = extract_claims(std::string(80, 'x'), ExtractionStrategy::kAtomic, client);
  std::vector<std::string> texts;
  for (const auto& c : claims) texts.push_back(c.text);
  // Kept in passage order; 19/20 overlap is a restatement, 10/20 is not.
  EXPECT_EQ(texts, (std::vector<std::string>{"A claim", "A partial", "B claim"}));
}

TEST(Extract, DecontextStrategiesRewriteEveryClaim) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) -> std::string {
    if (r.role == PromptRole::kGenerate) {
      return R"([{"text": "It reduces pressure", "span_start": 30, "span_end": 49},
                 {"text": "Timolol is a beta blocker", "span_start": 0, "span_end": 28}])";
    }
    if (r.variables.at("claim") == "It reduces pressure") return R"({"text": "Timolol reduces intraocular pressure"})";
    return echo_claim(r);
  });
  LlmClient client(backend);
  const std::string passage = "Timolol is a beta blocker. It reduces pressure in the eye.";
  for (auto strategy : {ExtractionStrategy::kDecontext, ExtractionStrategy::kMedDecontext}) {
    backend->calls.clear();
    auto claims = extract_claims(passage, strategy, client);
    ASSERT_EQ(claims.size(), 2u);
    EXPECT_EQ(claims[0].text, "Timolol is a beta blocker");
    EXPECT_EQ(claims[1].text, "Timolol reduces intraocular pressure");
    EXPECT_TRUE(claims[1].self_contained);
    EXPECT_EQ(backend->calls[0].template_id, prompt_template_id(strategy));
    EXPECT_EQ(count_role(backend->calls, PromptRole::kDecontextualize), 2u);
  }
}

TEST(Extract, UnusableClaimListIsExtractionFailed) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) { return std::string("[{\"text\": 3}]"); });
  LlmClient client(backend, nullptr, 2);
  EXPECT_EQ(kind_of([&] { extract_claims("Some passage.", ExtractionStrategy::kAtomic, client); }),
            ErrorKind::kExtractionFailed);
  EXPECT_EQ(backend->calls.size(), 3u);
}

TEST(Extract, SpanPastPassageEndIsRepaired) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest& r) -> std::string {
    if (r.attempt == 0) return R"([{"text": "a", "span_start": 0, "span_end": 500}])";
    return R"([{"text": "a", "span_start": 0, "span_end": 4}])";
  });
  LlmClient client(backend);
  auto claims = extract_claims("abcd", ExtractionStrategy::kAtomic, client);
  ASSERT_EQ(claims.size(), 1u);
  EXPECT_EQ(claims[0].span_end, 4u);
}

TEST(Extract, BackendFailurePropagates) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) -> std::string {
    throw Error(ErrorKind::kTimeout, "slow");
  });
  LlmClient client(backend);
  EXPECT_EQ(kind_of([&] { extract_claims("text", ExtractionStrategy::kAtomic, client); }), ErrorKind::kTimeout);
}

TEST(Decontextualize, ResolvesPronoun) {
  auto backend = std::make_shared<FnBackend>([](const PromptRequest&) {
    return std::string(R"({"text": "Timolol reduces intraocular pressure"})");
  });
  LlmClient client(backend);
  auto out = decontextualize({"It reduces pressure", 3, 22, false},
                             "Timolol is a topical beta blocker. It reduces pressure in the eye.", client);
  EXPECT_EQ(out.text, "Timolol reduces intraocular pressure");
  EXPECT_TRUE(out.self_contained);
  EXPECT_EQ(out.span_start, 3u);
  EXPECT_EQ(out.span_end, 22u);
}

TEST(Decontextualize, SelfContainedClaimIsAFixedPoint) {
  auto backend = std::make_shared<FnBackend>(echo_claim);
  LlmClient client(backend);
  ExtractedClaim claim{"Metformin lowers hepatic glucose output", 0, 10, false};
  auto out = decontextualize(claim, "Metformin lowers hepatic glucose output.", client);
  EXPECT_EQ(out.text, claim.text);
  EXPECT_TRUE(out.self_contained);
}

TEST(Decontextualize, Guards) {
  auto backend = std::make_shared<FnBackend>(echo_claim);
  LlmClient client(backend);
  EXPECT_EQ(kind_of([&] { decontextualize({"claim", 0, 5, false}, "", client); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { decontextualize({" ", 0, 5, false}, "ctx", client); }), ErrorKind::kInvalidInput);
  EXPECT_TRUE(backend->calls.empty());
}

TEST(Decontextualize, UnresolvedMarkerIsRepairedThenFails) {
  int calls = 0;
  auto backend = std::make_shared<FnBackend>([&](const PromptRequest&) {
    ++calls;
    return std::string(R"({"text": "[UNRESOLVED] reduces pressure"})");
  });
  LlmClient client(backend, nullptr, 1);
  EXPECT_EQ(kind_of([&] { decontextualize({"It reduces pressure", 0, 5, false}, "ctx", client); }),
            ErrorKind::kSchemaInvalid);
  EXPECT_EQ(calls, 2);
}
