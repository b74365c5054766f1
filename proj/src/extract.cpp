#include "claimtree/extract.hpp"

#include <algorithm>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"

namespace claimtree {
namespace {

std::vector<ExtractedClaim> drop_restatements(std::vector<ExtractedClaim> claims) {
  std::stable_sort(claims.begin(), claims.end(),
                   [](const auto& a, const auto& b) { return a.span_start < b.span_start; });
  std::vector<ExtractedClaim> kept;
  std::set<std::string> seen;
  for (auto& claim : claims) {
    if (!seen.insert(text::normalize_claim(claim.text)).second) continue;
    bool restates = std::any_of(kept.begin(), kept.end(), [&](const ExtractedClaim& k) {
      return span_overlap(k, claim) > kMaxSpanOverlap;
    });
    if (restates) continue;
    kept.push_back(std::move(claim));
  }
  return kept;
}

}  // namespace

std::string_view to_string(ExtractionStrategy strategy) {
  switch (strategy) {
    case ExtractionStrategy::kAtomic: return "atomic";
    case ExtractionStrategy::kDecontext: return "decontext";
    case ExtractionStrategy::kMedDecontext: return "med-decontext";
  }
  return "atomic";
}

ExtractionStrategy parse_extraction_strategy(std::string_view name) {
  std::string key = text::to_lower(name);
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "atomic") return ExtractionStrategy::kAtomic;
  if (key == "decontext") return ExtractionStrategy::kDecontext;
  if (key == "med-decontext") return ExtractionStrategy::kMedDecontext;
  throw Error(ErrorKind::kInvalidInput, "unknown extraction strategy '" + std::string(name) + "'");
}

std::string_view prompt_template_id(ExtractionStrategy strategy) {
  switch (strategy) {
    case ExtractionStrategy::kAtomic: return "generate.atomic.v1";
    case ExtractionStrategy::kDecontext: return "generate.decontext.v1";
    case ExtractionStrategy::kMedDecontext: return "generate.med_decontext.v1";
  }
  return "generate.atomic.v1";
}

double span_overlap(const ExtractedClaim& a, const ExtractedClaim& b) {
  size_t len_a = a.span_end - a.span_start;
  size_t len_b = b.span_end - b.span_start;
  size_t longest = std::max(len_a, len_b);
  if (longest == 0) return 0.0;
  size_t lo = std::max(a.span_start, b.span_start);
  size_t hi = std::min(a.span_end, b.span_end);
  size_t shared = hi > lo ? hi - lo : 0;
  return static_cast<double>(shared) / static_cast<double>(longest);
}

std::vector<ExtractedClaim> extract_claims(std::string_view text, ExtractionStrategy strategy,
                                           const LlmClient& client) {
  if (text::trim(text).empty()) return {};

  const size_t limit = text.size();
  json response;
  try {
    response = client.complete(
        PromptRole::kGenerate, prompt_template_id(strategy), {{"passage", std::string(text)}},
        [limit](const json& claims) {
          for (const auto& c : claims) {
            if (c["span_end"].get<size_t>() > limit) {
              throw Error(ErrorKind::kSchemaInvalid,
                          "claim span ends at " + std::to_string(c["span_end"].get<size_t>()) +
                              " past the passage end " + std::to_string(limit));
            }
          }
        });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kSchemaInvalid) throw;
    throw Error(ErrorKind::kExtractionFailed, "no usable claim list after " +
                                                  std::to_string(client.repair_rounds()) +
                                                  " retries: " + e.what());
  }

  std::vector<ExtractedClaim> claims;
  for (const auto& c : response) {
    claims.push_back(ExtractedClaim{text::trim(c["text"].get<std::string>()),
                                    c["span_start"].get<size_t>(), c["span_end"].get<size_t>(),
                                    false});
  }
  claims = drop_restatements(std::move(claims));
  if (strategy == ExtractionStrategy::kAtomic) return claims;

  for (auto& claim : claims) claim = decontextualize(claim, text, client);
  return drop_restatements(std::move(claims));
}

ExtractedClaim decontextualize(const ExtractedClaim& claim, std::string_view context,
                               const LlmClient& client) {
  if (text::trim(claim.text).empty()) throw Error(ErrorKind::kInvalidInput, "claim is empty");
  if (text::trim(context).empty()) throw Error(ErrorKind::kInvalidInput, "context is empty");
  json response = client.complete(
      PromptRole::kDecontextualize, {{"claim", claim.text}, {"context", std::string(context)}},
      [](const json& r) {
        if (r["text"].get<std::string>().find(kUnresolvedMarker) != std::string::npos) {
          throw Error(ErrorKind::kSchemaInvalid, "claim still has unresolved references");
        }
      });
  ExtractedClaim out = claim;
  out.text = text::trim(response["text"].get<std::string>());
  out.self_contained = true;
  return out;
}

}  // namespace claimtree
