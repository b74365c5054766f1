#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "claimtree/bench.hpp"
#include "claimtree/tree.hpp"

namespace claimtree {

struct GoldLabel {
  std::string sample_id;
  std::string text;
  Label label = Label::kFactual;
  Category category = Category::kPathophysiology;
};

// JSONL {sample_id, text, label, category}.
std::vector<GoldLabel> read_gold(const std::filesystem::path& path);

// One verified top-level claim taken from a run report.
struct Prediction {
  std::string sample_id;
  std::optional<Category> category;
  std::string claim;
  NodeState state = NodeState::kUnsubstantiated;
};

std::vector<Prediction> predictions_from_report(const json& report);

enum class MatchMode {
  kFixed,    // predictions were produced from the gold claim texts
  kMatched,  // greedy pairing by token F1
};

std::string_view to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view name);

inline constexpr double kMatchThreshold = 0.6;

// Harmonic mean of token precision and recall over lowercased alphanumeric
// token multisets. 0 when either side has no tokens.
double token_f1(std::string_view a, std::string_view b);

struct AlignedClaim {
  std::string sample_id;
  Category category = Category::kPathophysiology;
  std::string gold_text;
  Label label = Label::kFactual;
  std::optional<std::string> predicted_text;  // empty when the gold claim is unmatched
  std::optional<NodeState> state;
  double similarity = 0;
};

// Verdict counts of every prediction in one sample; input to F1@K.
struct SampleVerdicts {
  std::string sample_id;
  Category category = Category::kPathophysiology;
  size_t accepted = 0;
  size_t rejected = 0;
  size_t unsubstantiated = 0;
};

struct Alignment {
  MatchMode mode = MatchMode::kFixed;
  std::vector<AlignedClaim> claims;  // one per gold claim, gold order
  std::vector<Prediction> unmatched_predictions;
  std::vector<SampleVerdicts> samples;
};

// Fixed mode pairs claims by normalized text within each sample and throws
// kClaimSetMismatch listing every difference. Matched mode pairs greedily by
// descending token F1 (ties: lower gold index, then lower prediction index)
// and keeps pairs at or above kMatchThreshold.
Alignment match_claims(const std::vector<Prediction>& predictions,
                       const std::vector<GoldLabel>& gold, MatchMode mode);

// Accepted on a Factual claim or Rejected on a Falsified one is correct;
// Unsubstantiated and unmatched gold claims are incorrect. Throws
// kUndefinedMetric on an empty alignment.
double accuracy(const Alignment& alignment);

// Precision S / (S + N), recall min(S / K, 1), F1 their harmonic mean, with
// S supported and N not-supported facts. F1@K is 0 when S = 0.
double precision_of(size_t supported, size_t not_supported);
double recall_at_k(size_t supported, size_t k);
double f1_at_k(size_t supported, size_t not_supported, size_t k);

struct VerdictCounts {
  size_t accepted = 0;
  size_t rejected = 0;
  size_t unsubstantiated = 0;
  size_t unmatched = 0;  // gold claims without a prediction

  size_t total() const { return accepted + rejected + unsubstantiated + unmatched; }
  VerdictCounts& operator+=(const VerdictCounts& other);
};

struct MetricsRow {
  double accuracy = 0;
  double precision = 0;                 // mean over samples
  std::map<size_t, double> recall_at;   // mean over samples
  std::map<size_t, double> f1_at;       // mean over samples
  VerdictCounts counts;                 // over aligned gold claims
  size_t num_samples = 0;
};

struct MetricsReport {
  MatchMode mode = MatchMode::kFixed;
  std::vector<size_t> ks;
  std::map<Category, MetricsRow> per_category;  // categories present in gold
  MetricsRow avg;      // unweighted mean of category rows; counts summed
  MetricsRow overall;  // pooled over all claims and samples

  json to_json() const;
  std::string render_table() const;
};

inline constexpr size_t kDefaultKs[] = {5, 10};

// Throws kInvalidInput when `ks` is empty or contains 0.
MetricsReport report(const Alignment& alignment, const std::vector<size_t>& ks);

}  // namespace claimtree
