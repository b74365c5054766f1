#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimtree/llm.hpp"

namespace claimtree {

enum class FalsifyOperator {
  kNegation,
  kEntitySubstitution,
  kNumericPerturbation,
  kCausalReversal,
};

inline constexpr FalsifyOperator kAllOperators[] = {
    FalsifyOperator::kNegation, FalsifyOperator::kEntitySubstitution,
    FalsifyOperator::kNumericPerturbation, FalsifyOperator::kCausalReversal};

std::string_view to_string(FalsifyOperator op);
FalsifyOperator parse_falsify_operator(std::string_view name);

struct PerturbationMeta {
  FalsifyOperator op = FalsifyOperator::kNegation;
  std::string original_claim;
  uint64_t seed = 0;

  bool operator==(const PerturbationMeta&) const = default;
};

json to_json(const PerturbationMeta& meta);
PerturbationMeta perturbation_meta_from_json(const json& j);

// Typed entity lists used for same-type substitution. Entries are lowercase
// and may span several words.
class EntityOntology {
 public:
  static const EntityOntology& builtin();
  static EntityOntology from_json(const json& doc);  // {"type": ["entity", ...]}

  struct Match {
    size_t begin = 0;  // byte offsets into the searched text
    size_t end = 0;
    std::string type;
    std::string entity;
  };
  // Earliest whole-word mention, longest entity on ties.
  std::optional<Match> find(std::string_view text) const;
  const std::vector<std::string>& entities(const std::string& type) const;
  const std::map<std::string, std::vector<std::string>>& types() const { return types_; }

 private:
  std::map<std::string, std::vector<std::string>> types_;
};

// Lemma table for template negation: third-person, base and past forms.
struct VerbForms {
  std::string base;
  std::string third_person;
  std::string past;
};
const std::vector<VerbForms>& verb_lexicon();

struct Falsification {
  std::string text;
  PerturbationMeta meta;
};

bool is_applicable(std::string_view claim, FalsifyOperator op,
                   const EntityOntology& ontology = EntityOntology::builtin());
std::vector<FalsifyOperator> applicable_operators(
    std::string_view claim, const EntityOntology& ontology = EntityOntology::builtin());

// Deterministic corruption of one claim. Negation and CausalReversal are
// template rewrites; EntitySubstitution swaps in another entity of the same
// type; NumericPerturbation scales the first numeral by 0.1, 0.5, 2 or 10.
// Throws kInapplicableOperator when the claim offers nothing to perturb.
Falsification falsify(std::string_view claim, FalsifyOperator op, uint64_t seed,
                      const EntityOntology& ontology = EntityOntology::builtin());

// Exact decimal product of a numeral written in plain notation (commas
// allowed) with 0.1, 0.5, 2 or 10. Trailing zeros are trimmed.
std::string scale_numeral(std::string_view numeral, double factor);

inline constexpr double kNumericFactors[] = {0.1, 0.5, 2.0, 10.0};

}  // namespace claimtree
