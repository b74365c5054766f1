#include "claimtree/evidence.hpp"

#include <algorithm>
#include <cctype>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"

namespace claimtree {

std::string_view to_string(SourceTier tier) {
  switch (tier) {
    case SourceTier::kPeerReviewed: return "peer_reviewed";
    case SourceTier::kTextbook: return "textbook";
    case SourceTier::kEncyclopedia: return "encyclopedia";
    case SourceTier::kGeneralWeb: return "general_web";
    case SourceTier::kUnknown: return "unknown";
  }
  return "unknown";
}

SourceTier parse_source_tier(std::string_view name) {
  std::string key = text::to_lower(text::trim(name));
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "peer_reviewed" || key == "0") return SourceTier::kPeerReviewed;
  if (key == "textbook" || key == "1") return SourceTier::kTextbook;
  if (key == "encyclopedia" || key == "2") return SourceTier::kEncyclopedia;
  if (key == "general_web" || key == "3") return SourceTier::kGeneralWeb;
  if (key == "unknown" || key == "4") return SourceTier::kUnknown;
  throw Error(ErrorKind::kParse, "unknown source tier '" + std::string(name) + "'");
}

SourceTier source_tier_from_json(const json& j) {
  if (j.is_number_integer()) return parse_source_tier(std::to_string(j.get<int>()));
  if (j.is_string()) return parse_source_tier(j.get<std::string>());
  throw Error(ErrorKind::kParse, "tier must be a name or an integer");
}

json to_json(const Evidence& e) {
  return json{{"id", e.id},          {"tool_id", e.tool_id},     {"tier", std::string(to_string(e.tier))},
              {"title", e.title},    {"content", e.content},     {"relevance", e.relevance},
              {"uri", e.uri.empty() ? json(nullptr) : json(e.uri)}};
}

Evidence evidence_from_json(const json& j) {
  try {
    Evidence e;
    e.id = j.at("id").get<std::string>();
    e.tool_id = j.at("tool_id").get<std::string>();
    e.tier = source_tier_from_json(j.at("tier"));
    e.title = j.at("title").get<std::string>();
    e.content = j.at("content").get<std::string>();
    e.relevance = j.at("relevance").get<double>();
    if (j.contains("uri") && !j.at("uri").is_null()) e.uri = j.at("uri").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kParse, std::string("malformed evidence: ") + ex.what());
  }
}

std::string evidence_id(std::string_view tool_id, std::string_view source_id) {
  std::string id;
  id.reserve(tool_id.size() + source_id.size() + 1);
  auto append = [&id](std::string_view part) {
    for (char c : part) {
      bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
      id.push_back(ok ? c : '_');
    }
  };
  append(tool_id);
  id.push_back('-');
  append(source_id);
  return id;
}

double relevance(std::string_view claim, std::string_view snippet) {
  auto claim_words = text::content_words(claim);
  if (claim_words.empty()) return 0.0;
  auto snippet_words = text::content_words(snippet);
  size_t shared = 0;
  for (const auto& w : claim_words) shared += snippet_words.count(w);
  return static_cast<double>(shared) / static_cast<double>(claim_words.size());
}

std::vector<Evidence> rerank(const std::vector<RawDocument>& docs, std::string_view claim,
                             size_t top_k) {
  std::vector<Evidence> ranked;
  ranked.reserve(docs.size());
  for (const auto& doc : docs) {
    if (text::trim(doc.content).empty()) continue;
    ranked.push_back(Evidence{evidence_id(doc.tool_id, doc.source_id), doc.tool_id, doc.tier,
                              doc.title, doc.content, relevance(claim, doc.content), doc.uri});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Evidence& a, const Evidence& b) {
    if (a.tier != b.tier) return a.tier < b.tier;
    return a.relevance > b.relevance;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

}  // namespace claimtree
