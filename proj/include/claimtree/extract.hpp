#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "claimtree/llm.hpp"

namespace claimtree {

// Prompting strategies for claim extraction. Decontext and MedDecontext run a
// per-claim decontextualization pass after extraction.
enum class ExtractionStrategy { kAtomic, kDecontext, kMedDecontext };

std::string_view to_string(ExtractionStrategy strategy);
// Accepts "atomic", "decontext", "med-decontext" (case-insensitive, '_' ok).
ExtractionStrategy parse_extraction_strategy(std::string_view name);
std::string_view prompt_template_id(ExtractionStrategy strategy);

struct ExtractedClaim {
  std::string text;
  // Byte range [span_start, span_end) of the input the claim came from.
  size_t span_start = 0;
  size_t span_end = 0;
  bool self_contained = false;

  bool operator==(const ExtractedClaim&) const = default;
};

// Claims whose spans overlap by more than this fraction of the longer span
// are treated as restatements of each other.
inline constexpr double kMaxSpanOverlap = 0.8;

// |a ∩ b| / max(|a|, |b|); 0 when both spans are empty.
double span_overlap(const ExtractedClaim& a, const ExtractedClaim& b);

// Claims in source order with restatements removed: duplicates by
// normalized text and span-overlap restatements keep the first occurrence.
// Schema failures after the client's repair rounds become kExtractionFailed.
std::vector<ExtractedClaim> extract_claims(std::string_view text, ExtractionStrategy strategy,
                                           const LlmClient& client);

ExtractedClaim decontextualize(const ExtractedClaim& claim, std::string_view context,
                               const LlmClient& client);

// Marker the decontextualization prompt uses for references it cannot resolve.
inline constexpr std::string_view kUnresolvedMarker = "[UNRESOLVED]";

}  // namespace claimtree
