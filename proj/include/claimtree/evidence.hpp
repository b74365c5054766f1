#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace claimtree {

using json = nlohmann::json;

// Source credibility, most reliable first. The numeric value is the primary
// rerank key.
enum class SourceTier {
  kPeerReviewed = 0,
  kTextbook = 1,
  kEncyclopedia = 2,
  kGeneralWeb = 3,
  kUnknown = 4,
};

std::string_view to_string(SourceTier tier);
// Accepts the snake_case names or the digits 0-4.
SourceTier parse_source_tier(std::string_view name);
SourceTier source_tier_from_json(const json& j);

// A document as returned by a tool, before reranking.
struct RawDocument {
  std::string source_id;  // id within the tool (corpus doc id, hashed URI, ...)
  std::string tool_id;
  SourceTier tier = SourceTier::kUnknown;
  std::string title;
  std::string content;
  std::string uri;

  bool operator==(const RawDocument&) const = default;
};

struct Evidence {
  std::string id;
  std::string tool_id;
  SourceTier tier = SourceTier::kUnknown;
  std::string title;
  std::string content;
  double relevance = 0.0;  // in [0, 1]
  std::string uri;         // empty when the source has no locator

  bool operator==(const Evidence&) const = default;
};

json to_json(const Evidence& evidence);
Evidence evidence_from_json(const json& j);

// Run-wide evidence id for a tool document: "<tool>-<source>" restricted to
// [A-Za-z0-9._-] so it doubles as a file name.
std::string evidence_id(std::string_view tool_id, std::string_view source_id);

// |content-words(claim) ∩ content-words(snippet)| / |content-words(claim)|,
// 0 when the claim has no content words.
double relevance(std::string_view claim, std::string_view snippet);

inline constexpr size_t kDefaultTopK = 5;

// Drops documents with blank content, scores the rest against the claim and
// orders them by (tier ascending, relevance descending, input order), keeping
// the first top_k.
std::vector<Evidence> rerank(const std::vector<RawDocument>& docs, std::string_view claim,
                             size_t top_k = kDefaultTopK);

}  // namespace claimtree
