#include "authoring_backend.hpp"

#include <sstream>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree::testkit {

namespace {

void index_claims(const json& claims, std::map<std::string, json>& out) {
  for (const auto& c : claims) {
    auto key = text::normalize_claim(c.at("text").get<std::string>());
    if (!out.emplace(key, c).second) {
      throw Error(ErrorKind::kDuplicateId, "claim authored twice: " + key);
    }
    if (c.contains("subclaims")) index_claims(c["subclaims"], out);
  }
}

std::string bracket_id(const std::string& line, size_t from) {
  size_t open = line.find('[', from);
  size_t close = line.find(']', open);
  if (open == std::string::npos || close == std::string::npos) return {};
  return line.substr(open + 1, close - open - 1);
}

std::string token_form(std::string_view s) { return " " + text::join(text::tokenize(s), " ") + " "; }

bool states(std::string_view passage, std::string_view claim) {
  return token_form(passage).find(token_form(claim)) != std::string::npos;
}

}  // namespace

std::vector<std::string> evidence_ids_in(const std::string& rendered) {
  std::vector<std::string> ids;
  std::istringstream in(rendered);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] == '[') ids.push_back(bracket_id(line, 0));
  }
  return ids;
}

std::vector<std::string> child_ids_in(const std::string& rendered) {
  std::vector<std::string> ids;
  std::istringstream in(rendered);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("- [", 0) == 0) ids.push_back(bracket_id(line, 2));
  }
  return ids;
}

std::vector<std::string> bullet_items(const std::string& rendered) {
  std::vector<std::string> items;
  std::istringstream in(rendered);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("- ", 0) == 0) items.push_back(text::trim(line.substr(2)));
  }
  if (items.empty()) items.push_back(text::trim(rendered));
  return items;
}

AuthoringBackend::AuthoringBackend(json scenarios) : doc_(std::move(scenarios)) {
  const auto& list = doc_.at("scenarios");
  for (size_t i = 0; i < list.size(); ++i) {
    by_passage_[list[i].at("text").get<std::string>()] = i;
    index_claims(list[i].at("claims"), by_claim_);
  }
}

std::shared_ptr<AuthoringBackend> AuthoringBackend::from_file(const std::filesystem::path& path) {
  return std::make_shared<AuthoringBackend>(json::parse(read_file(path)));
}

const json& AuthoringBackend::scenario_for_passage(const std::string& passage) const {
  auto it = by_passage_.find(passage);
  if (it == by_passage_.end()) {
    throw Error(ErrorKind::kFixtureGap, "no authored scenario for passage: " + passage.substr(0, 60));
  }
  return doc_.at("scenarios")[it->second];
}

const json& AuthoringBackend::claim_spec(const std::string& claim) const {
  auto it = by_claim_.find(text::normalize_claim(claim));
  if (it == by_claim_.end()) throw Error(ErrorKind::kFixtureGap, "no authored claim: " + claim);
  return it->second;
}

std::string AuthoringBackend::complete_raw(const PromptRequest& request) {
  if (request.attempt > 0) throw Error(ErrorKind::kFixtureGap, "authored responses never need repair");
  const auto& v = request.variables;
  switch (request.role) {
    case PromptRole::kGenerate: {
      const json& s = scenario_for_passage(v.at("passage"));
      const std::string& passage = v.at("passage");
      auto sentences = text::split_sentences(passage);
      json out = json::array();
      size_t cursor = 0;
      const auto& claims = s.at("claims");
      for (size_t i = 0; i < claims.size(); ++i) {
        size_t begin = passage.find(sentences.at(i), cursor);
        size_t end = begin + sentences[i].size();
        cursor = end;
        out.push_back({{"text", claims[i].at("text")}, {"span_start", begin}, {"span_end", end}});
      }
      return out.dump();
    }
    case PromptRole::kDecontextualize:
      return json{{"text", v.at("claim")}}.dump();
    case PromptRole::kQuery: {
      const json& c = claim_spec(v.at("claim"));
      return json{{"tool_id", c.at("tool")}, {"query", c.at("query")}}.dump();
    }
    case PromptRole::kVerifyLeaf: {
      const json& c = claim_spec(v.at("claim"));
      json ids = json::array();
      for (const auto& id : c.at("cite")) {
        if (id == "*") {
          for (const auto& e : evidence_ids_in(v.at("evidence"))) ids.push_back(e);
        } else {
          ids.push_back(id);
        }
      }
      return json{{"decision", c.at("verdict")}, {"reason", c.at("reason")}, {"evidence_ids", ids}}.dump();
    }
    case PromptRole::kSpan: {
      const json& c = claim_spec(v.at("claim"));
      json out = json::array();
      for (const auto& sub : c.value("subclaims", json::array())) out.push_back(sub.at("text"));
      return out.dump();
    }
    case PromptRole::kConsolidate: {
      const json& c = claim_spec(v.at("claim"));
      const json& decision = c.at("consolidate");
      return json{{"decision", decision.at("decision")},
                  {"reason", decision.at("reason")},
                  {"essential_child_ids", child_ids_in(v.at("children"))}}
          .dump();
    }
    case PromptRole::kCurateExtract: {
      const json& s = scenario_for_passage(v.at("passage"));
      json out = json::array();
      for (const auto& c : s.at("claims")) out.push_back(c.at("text"));
      return out.dump();
    }
    case PromptRole::kCurateParaphrase:
      return json{{"text", text::join(bullet_items(v.at("claims")), " ")}}.dump();
    case PromptRole::kCurateAlternative: {
      std::string body = v.at("text");
      auto originals = bullet_items(v.at("original_claim"));
      auto falsified = bullet_items(v.at("falsified_claim"));
      for (size_t i = 0; i < originals.size(); ++i) {
        size_t pos = body.find(originals[i]);
        if (pos == std::string::npos) throw Error(ErrorKind::kFixtureGap, "claim not in text: " + originals[i]);
        body.replace(pos, originals[i].size(), falsified.at(i));
      }
      return json{{"text", body}}.dump();
    }
    case PromptRole::kCurateFalsify: {
      bool ok = true;
      for (const auto& f : bullet_items(v.at("falsified_claim"))) {
        ok = ok && !states(v.at("factual_text"), f) && states(v.at("falsified_text"), f);
      }
      return json{{"consistent", ok}, {"reason", ok ? "texts differ only in the falsified claim"
                                                    : "falsified claim placement is wrong"}}
          .dump();
    }
  }
  throw Error(ErrorKind::kFixtureGap, "unsupported role");
}

}  // namespace claimtree::testkit
