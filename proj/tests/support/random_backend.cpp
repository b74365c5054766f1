#include "random_backend.hpp"

#include "authoring_backend.hpp"
#include "claimtree/error.hpp"
#include "claimtree/util.hpp"

namespace claimtree::testkit {

RandomBackend::RandomBackend(uint64_t seed, std::vector<std::string> tool_ids, std::vector<std::string> vocabulary)
    : seed_(seed), tool_ids_(std::move(tool_ids)), vocabulary_(std::move(vocabulary)) {}

std::string RandomBackend::passage(uint64_t seed, const std::vector<std::string>& vocabulary, size_t words) {
  SeededRng rng(seed);
  std::string out;
  for (size_t i = 0; i < words; ++i) {
    out += vocabulary[rng.uniform_index(vocabulary.size())];
    out += (i % 8 == 7) ? ". " : " ";
  }
  return out + "end.";
}

std::string RandomBackend::complete_raw(const PromptRequest& request) {
  SeededRng rng(mix_seed(seed_, fnv1a64(request.prompt)));
  auto chance = [&](int percent) { return rng.uniform_index(100) < static_cast<uint64_t>(percent); };
  auto phrase = [&](size_t n) {
    std::string s;
    for (size_t i = 0; i < n; ++i) {
      if (i) s += " ";
      s += vocabulary_[rng.uniform_index(vocabulary_.size())];
    }
    return s;
  };
  const bool repair = request.attempt > 0;
  const auto& v = request.variables;

  switch (request.role) {
    case PromptRole::kGenerate: {
      const size_t length = v.at("passage").size();
      json out = json::array();
      size_t n = rng.uniform_index(8);
      for (size_t i = 0; i < n && (i + 1) * 10 <= length; ++i) {
        out.push_back({{"text", phrase(3 + rng.uniform_index(4)) + " " + std::to_string(i)},
                       {"span_start", i * 10},
                       {"span_end", i * 10 + 8}});
      }
      return out.dump();
    }
    case PromptRole::kDecontextualize:
      return json{{"text", v.at("claim")}}.dump();
    case PromptRole::kQuery: {
      if (!repair && chance(10)) return "the corpus, probably";
      std::string tool = chance(5) ? "unregistered" : tool_ids_[rng.uniform_index(tool_ids_.size())];
      std::string query;
      if (tool == "calc") {
        static const char* kExpressions[] = {"2 + 2", "1 / 0", "cha2ds2_vasc(70, 1, 0, 1, 0, 0, 1)",
                                             "bmi(70, 0)", "unknown_fn(3)", "(4 + 6) * 0.5"};
        query = kExpressions[rng.uniform_index(6)];
      } else {
        query = phrase(1 + rng.uniform_index(3));
      }
      return json{{"tool_id", tool}, {"query", query}}.dump();
    }
    case PromptRole::kVerifyLeaf: {
      if (!repair && chance(3)) return "{\"decision\": \"maybe\"}";
      auto ids = evidence_ids_in(repair ? v.at("prompt") : v.at("evidence"));
      static const char* kDecisions[] = {"accept", "reject", "unsubstantiated"};
      json cited = json::array();
      for (const auto& id : ids) {
        if (chance(50)) cited.push_back(id);
      }
      if (chance(10)) cited.push_back("corpus-not-retrieved");
      return json{{"decision", kDecisions[rng.uniform_index(3)]}, {"reason", phrase(5)}, {"evidence_ids", cited}}
          .dump();
    }
    case PromptRole::kSpan: {
      json out = json::array();
      size_t n = rng.uniform_index(8);
      for (size_t i = 0; i < n; ++i) out.push_back(phrase(3 + rng.uniform_index(3)) + " part " + std::to_string(i));
      return out.dump();
    }
    case PromptRole::kConsolidate: {
      if (!repair && chance(10)) return "[]";
      if (chance(50)) {
        return json{{"score", 1 + rng.uniform_index(10)}, {"reason", phrase(4)}, {"essential_child_ids", json::array()}}
            .dump();
      }
      static const char* kDecisions[] = {"accept", "reject", "unsubstantiated"};
      return json{{"decision", kDecisions[rng.uniform_index(3)]},
                  {"reason", phrase(4)},
                  {"essential_child_ids", json::array()}}
          .dump();
    }
    default:
      throw Error(ErrorKind::kFixtureGap, "random backend does not curate");
  }
}

}  // namespace claimtree::testkit
