#include "claimtree/falsify.hpp"

#include <algorithm>
#include <cctype>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {
namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Lowercases the first letter unless the first word looks like an acronym or
// a mixed-case name (e.g. "HbA1c", "IOP").
std::string decapitalize(std::string s) {
  if (s.size() < 2 || !std::isupper(static_cast<unsigned char>(s[0]))) return s;
  for (size_t i = 1; i < s.size() && is_word_char(s[i]); ++i) {
    if (std::isupper(static_cast<unsigned char>(s[i])) || std::isdigit(static_cast<unsigned char>(s[i]))) {
      return s;
    }
  }
  s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

// Splits off trailing sentence punctuation.
std::pair<std::string, std::string> split_terminal(std::string_view s) {
  std::string body = text::trim(s);
  std::string tail;
  while (!body.empty() && (body.back() == '.' || body.back() == '!' || body.back() == '?')) {
    tail.insert(tail.begin(), body.back());
    body.pop_back();
  }
  return {text::trim(body), tail};
}

struct Word {
  size_t begin;  // core (punctuation-stripped) span
  size_t end;
  std::string lower;
};

std::vector<Word> words_of(std::string_view s) {
  std::vector<Word> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t b = start, e = i;
    while (b < e && !is_word_char(s[b])) ++b;
    while (e > b && !is_word_char(s[e - 1]) && s[e - 1] != '\'') --e;
    if (b < e) out.push_back({b, e, text::to_lower(s.substr(b, e - b))});
  }
  return out;
}

VerbForms regular(std::string base) {
  auto ends = [&](std::string_view suf) {
    return base.size() >= suf.size() && base.compare(base.size() - suf.size(), suf.size(), suf) == 0;
  };
  bool consonant_y = base.size() >= 2 && base.back() == 'y' &&
                     std::string_view("aeiou").find(base[base.size() - 2]) == std::string_view::npos;
  std::string third, past;
  if (consonant_y) {
    third = base.substr(0, base.size() - 1) + "ies";
    past = base.substr(0, base.size() - 1) + "ied";
  } else {
    third = (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh") || ends("o")) ? base + "es"
                                                                                      : base + "s";
    past = ends("e") ? base + "d" : base + "ed";
  }
  return {base, third, past};
}

const std::vector<std::string_view> kAuxiliaries = {
    "is", "are", "was", "were", "can", "could", "may", "might", "must",
    "should", "shall", "will", "would", "does", "do", "did"};

bool is_auxiliary(const std::vector<Word>& words, size_t i) {
  const std::string& w = words[i].lower;
  if (std::find(kAuxiliaries.begin(), kAuxiliaries.end(), w) != kAuxiliaries.end()) return true;
  if ((w == "has" || w == "have" || w == "had") && i + 1 < words.size()) {
    const std::string& next = words[i + 1].lower;
    auto ends = [&](std::string_view suf) {
      return next.size() > suf.size() && next.compare(next.size() - suf.size(), suf.size(), suf) == 0;
    };
    return next == "been" || ends("ed") || ends("en");
  }
  return false;
}

std::string negate(std::string_view claim) {
  std::string s(text::trim(claim));
  auto words = words_of(s);
  for (size_t i = 1; i < words.size(); ++i) {
    const Word& w = words[i];
    if (w.lower == "cannot") return s.substr(0, w.begin) + s.substr(w.begin, 3) + s.substr(w.end);
    if (!is_auxiliary(words, i)) continue;
    if (i + 1 < words.size() && words[i + 1].lower == "not") {
      return s.substr(0, w.end) + s.substr(words[i + 1].end);
    }
    return s.substr(0, w.end) + " not" + s.substr(w.end);
  }
  for (size_t i = 1; i < words.size(); ++i) {
    const Word& w = words[i];
    for (const auto& v : verb_lexicon()) {
      std::string replacement;
      if (w.lower == v.third_person) {
        replacement = "does not " + v.base;
      } else if (w.lower == v.past && v.past != v.base) {
        replacement = "did not " + v.base;
      } else if (w.lower == v.base) {
        replacement = "do not " + v.base;
      } else {
        continue;
      }
      return s.substr(0, w.begin) + replacement + s.substr(w.end);
    }
  }
  auto [body, tail] = split_terminal(s);
  return "It is not the case that " + decapitalize(body) + (tail.empty() ? "." : tail);
}

const std::vector<std::string_view> kCausalPhrases = {
    " is caused by ", " are caused by ", " is triggered by ", " are triggered by ",
    " results from ", " result from ", " leads to ", " lead to ", " results in ", " result in ",
    " causes ", " cause ", " triggers ", " trigger ", " induces ", " induce "};

std::optional<std::string> reverse_causal(std::string_view claim) {
  auto [body, tail] = split_terminal(claim);
  const std::string lower = text::to_lower(body);
  size_t best = std::string::npos;
  std::string_view phrase;
  for (auto p : kCausalPhrases) {
    size_t pos = lower.find(p);
    if (pos == std::string::npos) continue;
    if (pos < best || (pos == best && p.size() > phrase.size())) {
      best = pos;
      phrase = p;
    }
  }
  if (best == std::string::npos) return std::nullopt;
  std::string left = text::trim(body.substr(0, best));
  std::string right = text::trim(body.substr(best + phrase.size()));
  if (left.empty() || right.empty()) return std::nullopt;
  std::string connective = body.substr(best, phrase.size());
  return capitalize(right) + connective + decapitalize(left) + tail;
}

struct NumeralSpan {
  size_t begin;
  size_t end;
};

std::optional<NumeralSpan> find_numeral(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(s[i])) {
      ++i;
      continue;
    }
    bool boundary = i == 0 || (!is_word_char(s[i - 1]) && s[i - 1] != '.' && s[i - 1] != ',');
    if (boundary && std::isdigit(static_cast<unsigned char>(s[i]))) {
      size_t j = i;
      while (j < s.size()) {
        if (std::isdigit(static_cast<unsigned char>(s[j]))) {
          ++j;
        } else if (s[j] == ',' && j + 3 < s.size() &&
                   std::isdigit(static_cast<unsigned char>(s[j + 1])) &&
                   std::isdigit(static_cast<unsigned char>(s[j + 2])) &&
                   std::isdigit(static_cast<unsigned char>(s[j + 3])) &&
                   (j + 4 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[j + 4])))) {
          j += 4;
        } else {
          break;
        }
      }
      if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      return NumeralSpan{i, j};
    }
    while (i < s.size() && is_word_char(s[i])) ++i;
  }
  return std::nullopt;
}

bool numeral_is_zero(std::string_view numeral) {
  return std::none_of(numeral.begin(), numeral.end(), [](char c) { return c >= '1' && c <= '9'; });
}

}  // namespace

std::string_view to_string(FalsifyOperator op) {
  switch (op) {
    case FalsifyOperator::kNegation: return "negation";
    case FalsifyOperator::kEntitySubstitution: return "entity_substitution";
    case FalsifyOperator::kNumericPerturbation: return "numeric_perturbation";
    case FalsifyOperator::kCausalReversal: return "causal_reversal";
  }
  return "negation";
}

FalsifyOperator parse_falsify_operator(std::string_view name) {
  for (auto op : kAllOperators) {
    if (to_string(op) == name) return op;
  }
  throw Error(ErrorKind::kParse, "unknown falsification operator '" + std::string(name) + "'");
}

json to_json(const PerturbationMeta& meta) {
  return {{"operator", std::string(to_string(meta.op))},
          {"original_claim", meta.original_claim},
          {"seed", meta.seed}};
}

PerturbationMeta perturbation_meta_from_json(const json& j) {
  try {
    return {parse_falsify_operator(j.at("operator").get<std::string>()),
            j.at("original_claim").get<std::string>(), j.at("seed").get<uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("perturbation: ") + e.what());
  }
}

const std::vector<VerbForms>& verb_lexicon() {
  static const std::vector<VerbForms> lexicon = [] {
    std::vector<VerbForms> v;
    for (const char* base :
         {"lower", "raise", "reduce", "increase", "decrease", "cause", "treat", "prevent",
          "inhibit", "block", "improve", "require", "need", "affect", "contain", "help",
          "protect", "damage", "stimulate", "activate", "suppress", "relieve", "worsen",
          "trigger", "include", "involve", "indicate", "confirm", "show", "cure", "control",
          "regulate", "promote", "occur", "develop", "slow", "delay", "impair", "enhance",
          "elevate", "restore", "target", "transmit", "infect", "destroy", "secrete", "release",
          "absorb", "metabolize", "produce", "induce", "result", "respond", "mimic", "shorten",
          "carry", "supply", "deliver", "signal", "detect", "measure", "reveal", "narrow",
          "widen", "thin", "replace", "attack", "cross", "act", "work", "reach"}) {
      v.push_back(regular(base));
    }
    v.push_back({"lead", "leads", "led"});
    v.push_back({"bind", "binds", "bound"});
    v.push_back({"have", "has", "had"});
    v.push_back({"make", "makes", "made"});
    v.push_back({"take", "takes", "took"});
    v.push_back({"become", "becomes", "became"});
    v.push_back({"spread", "spreads", "spread"});
    v.push_back({"rise", "rises", "rose"});
    v.push_back({"fall", "falls", "fell"});
    v.push_back({"keep", "keeps", "kept"});
    return v;
  }();
  return lexicon;
}

const EntityOntology& EntityOntology::builtin() {
  static const EntityOntology ontology = from_json({
      {"drug",
       {"timolol", "latanoprost", "metformin", "aspirin", "warfarin", "lisinopril", "amlodipine",
        "atorvastatin", "ibuprofen", "acetaminophen", "amoxicillin", "omeprazole",
        "levothyroxine", "prednisone", "salbutamol", "heparin", "digoxin", "furosemide",
        "metoprolol", "oseltamivir"}},
      {"condition",
       {"glaucoma", "diabetes", "hypertension", "asthma", "migraine", "pneumonia",
        "tuberculosis", "hypothyroidism", "anemia", "osteoporosis", "stroke", "influenza",
        "malaria", "psoriasis", "epilepsy", "gout", "cataract", "hepatitis", "atrial fibrillation",
        "heart failure"}},
      {"organ",
       {"liver", "kidney", "heart", "lung", "pancreas", "brain", "stomach", "retina", "thyroid",
        "spleen", "skin", "bone marrow", "optic nerve", "colon"}},
      {"nutrient",
       {"vitamin a", "vitamin b12", "vitamin c", "vitamin d", "vitamin k", "iron", "calcium",
        "folate", "zinc", "magnesium", "potassium", "sodium"}},
      {"hormone",
       {"insulin", "glucagon", "cortisol", "thyroxine", "estrogen", "testosterone", "adrenaline",
        "melatonin"}},
      {"pathogen",
       {"staphylococcus aureus", "streptococcus pneumoniae", "escherichia coli",
        "mycobacterium tuberculosis", "plasmodium falciparum", "helicobacter pylori",
        "influenza virus", "varicella zoster virus"}},
      {"cell",
       {"neutrophils", "lymphocytes", "platelets", "red blood cells", "macrophages",
        "beta cells", "osteoclasts"}},
  });
  return ontology;
}

EntityOntology EntityOntology::from_json(const json& doc) {
  if (!doc.is_object() || doc.empty()) {
    throw Error(ErrorKind::kInvalidInput, "ontology must be a non-empty object of entity lists");
  }
  EntityOntology out;
  std::map<std::string, std::string> owner;
  for (const auto& [type, list] : doc.items()) {
    auto& entries = out.types_[type];
    for (const auto& item : list) {
      std::string entity = text::normalize_claim(item.get<std::string>());
      if (entity.empty()) continue;
      auto [it, inserted] = owner.emplace(entity, type);
      if (!inserted) {
        throw Error(ErrorKind::kDuplicateId,
                    "entity '" + entity + "' listed under both " + it->second + " and " + type);
      }
      entries.push_back(entity);
    }
  }
  return out;
}

const std::vector<std::string>& EntityOntology::entities(const std::string& type) const {
  auto it = types_.find(type);
  if (it == types_.end()) throw Error(ErrorKind::kInvalidInput, "unknown entity type " + type);
  return it->second;
}

std::optional<EntityOntology::Match> EntityOntology::find(std::string_view input) const {
  const std::string lower = text::to_lower(input);
  std::optional<Match> best;
  for (const auto& [type, entries] : types_) {
    for (const auto& entity : entries) {
      for (size_t pos = lower.find(entity); pos != std::string::npos;
           pos = lower.find(entity, pos + 1)) {
        size_t end = pos + entity.size();
        bool bounded = (pos == 0 || !is_word_char(lower[pos - 1])) &&
                       (end == lower.size() || !is_word_char(lower[end]));
        if (!bounded) continue;
        if (!best || pos < best->begin ||
            (pos == best->begin && entity.size() > best->entity.size())) {
          best = Match{pos, end, type, entity};
        }
        break;
      }
    }
  }
  return best;
}

std::string scale_numeral(std::string_view numeral, double factor) {
  std::string digits;
  int scale = 0;
  bool after_point = false;
  for (char c : numeral) {
    if (c == ',') continue;
    if (c == '.') {
      if (after_point) throw Error(ErrorKind::kInvalidInput, "bad numeral " + std::string(numeral));
      after_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw Error(ErrorKind::kInvalidInput, "bad numeral " + std::string(numeral));
    }
    digits.push_back(c);
    if (after_point) ++scale;
  }
  if (digits.empty()) throw Error(ErrorKind::kInvalidInput, "empty numeral");

  auto multiply = [&](int m) {
    std::string out(digits.size() + 1, '0');
    int carry = 0;
    for (size_t k = digits.size(); k-- > 0;) {
      int v = (digits[k] - '0') * m + carry;
      out[k + 1] = static_cast<char>('0' + v % 10);
      carry = v / 10;
    }
    out[0] = static_cast<char>('0' + carry);
    digits = out;
  };
  if (factor == 10.0) {
    --scale;
  } else if (factor == 0.1) {
    ++scale;
  } else if (factor == 2.0) {
    multiply(2);
  } else if (factor == 0.5) {
    multiply(5);
    ++scale;
  } else {
    throw Error(ErrorKind::kInvalidInput, "unsupported factor");
  }

  if (scale < 0) digits.append(static_cast<size_t>(-scale), '0'), scale = 0;
  if (digits.size() < static_cast<size_t>(scale) + 1) {
    digits.insert(0, static_cast<size_t>(scale) + 1 - digits.size(), '0');
  }
  std::string whole = digits.substr(0, digits.size() - static_cast<size_t>(scale));
  std::string frac = digits.substr(digits.size() - static_cast<size_t>(scale));
  whole.erase(0, std::min(whole.find_first_not_of('0'), whole.size() - 1));
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return frac.empty() ? whole : whole + "." + frac;
}

bool is_applicable(std::string_view claim, FalsifyOperator op, const EntityOntology& ontology) {
  if (text::trim(claim).empty()) return false;
  switch (op) {
    case FalsifyOperator::kNegation: return true;
    case FalsifyOperator::kCausalReversal: return reverse_causal(claim).has_value();
    case FalsifyOperator::kNumericPerturbation: {
      auto span = find_numeral(claim);
      return span && !numeral_is_zero(claim.substr(span->begin, span->end - span->begin));
    }
    case FalsifyOperator::kEntitySubstitution: {
      auto match = ontology.find(claim);
      return match && ontology.entities(match->type).size() > 1;
    }
  }
  return false;
}

std::vector<FalsifyOperator> applicable_operators(std::string_view claim,
                                                  const EntityOntology& ontology) {
  std::vector<FalsifyOperator> out;
  for (auto op : kAllOperators) {
    if (is_applicable(claim, op, ontology)) out.push_back(op);
  }
  return out;
}

Falsification falsify(std::string_view claim, FalsifyOperator op, uint64_t seed,
                      const EntityOntology& ontology) {
  if (!is_applicable(claim, op, ontology)) {
    throw Error(ErrorKind::kInapplicableOperator,
                std::string(to_string(op)) + " does not apply to: " + std::string(claim));
  }
  const std::string original = text::trim(claim);
  std::string result;
  switch (op) {
    case FalsifyOperator::kNegation:
      result = negate(original);
      break;
    case FalsifyOperator::kCausalReversal:
      result = *reverse_causal(original);
      break;
    case FalsifyOperator::kNumericPerturbation: {
      auto span = *find_numeral(original);
      SeededRng rng(seed);
      double factor = kNumericFactors[rng.uniform_index(std::size(kNumericFactors))];
      result = original.substr(0, span.begin) +
               scale_numeral(std::string_view(original).substr(span.begin, span.end - span.begin), factor) +
               original.substr(span.end);
      break;
    }
    case FalsifyOperator::kEntitySubstitution: {
      auto match = *ontology.find(original);
      std::vector<std::string> others;
      for (const auto& e : ontology.entities(match.type)) {
        if (e != match.entity) others.push_back(e);
      }
      SeededRng rng(seed);
      std::string replacement = others[rng.uniform_index(others.size())];
      if (std::isupper(static_cast<unsigned char>(original[match.begin]))) {
        replacement = capitalize(replacement);
      }
      result = original.substr(0, match.begin) + replacement + original.substr(match.end);
      break;
    }
  }
  if (text::normalize_claim(result) == text::normalize_claim(original)) {
    throw Error(ErrorKind::kInapplicableOperator,
                std::string(to_string(op)) + " left the claim unchanged: " + original);
  }
  return {result, {op, original, seed}};
}

}  // namespace claimtree
