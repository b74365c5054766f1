#include "claimtree/bench.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/parallel.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {

namespace fs = std::filesystem;

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kPathophysiology: return "Pathophysiology";
    case Category::kMedication: return "Medication";
    case Category::kDiagnosis: return "Diagnosis";
    case Category::kSymptom: return "Symptom";
    case Category::kTreatment: return "Treatment";
    case Category::kPrevention: return "Prevention";
  }
  return "Pathophysiology";
}

Category parse_category(std::string_view name) {
  const std::string lower = text::to_lower(text::trim(name));
  for (auto c : kAllCategories) {
    if (text::to_lower(to_string(c)) == lower) return c;
  }
  throw Error(ErrorKind::kInvalidInput, "unknown category '" + std::string(name) + "'");
}

std::string_view to_string(Label label) {
  return label == Label::kFactual ? "factual" : "falsified";
}

Label parse_label(std::string_view name) {
  const std::string lower = text::to_lower(text::trim(name));
  if (lower == "factual") return Label::kFactual;
  if (lower == "falsified") return Label::kFalsified;
  throw Error(ErrorKind::kInvalidInput, "unknown label '" + std::string(name) + "'");
}

size_t BenchRecord::falsified_count() const {
  return static_cast<size_t>(std::count_if(claims.begin(), claims.end(), [](const BenchClaim& c) {
    return c.label == Label::kFalsified;
  }));
}

void BenchRecord::validate(size_t expected_falsified) const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kInvariantViolation, "record " + id + ": " + what);
  };
  if (id.empty()) fail("empty id");
  if (falsified_count() != expected_falsified) {
    fail(std::to_string(falsified_count()) + " falsified claims, expected " +
         std::to_string(expected_falsified));
  }
  for (const auto& c : claims) {
    if (text::trim(c.text).empty()) fail("empty claim");
    if (c.label == Label::kFalsified) {
      if (!c.perturbation) fail("falsified claim without perturbation");
      if (text::normalize_claim(c.perturbation->original_claim) == text::normalize_claim(c.text)) {
        fail("falsified claim equals its original");
      }
    } else if (c.perturbation) {
      fail("factual claim with perturbation");
    }
  }
  if (text::normalize_claim(factual_text) == text::normalize_claim(falsified_text)) {
    fail("falsified text equals factual text");
  }
}

json BenchRecord::to_json() const {
  json cs = json::array();
  for (const auto& c : claims) {
    cs.push_back({{"text", c.text},
                  {"label", std::string(claimtree::to_string(c.label))},
                  {"perturbation", c.perturbation ? claimtree::to_json(*c.perturbation) : json(nullptr)}});
  }
  return {{"schema_version", kBenchSchemaVersion},
          {"id", id},
          {"category", std::string(claimtree::to_string(category))},
          {"source_text", source_text},
          {"factual_text", factual_text},
          {"falsified_text", falsified_text},
          {"claims", std::move(cs)}};
}

BenchRecord BenchRecord::from_json(const json& j) {
  try {
    if (j.value("schema_version", kBenchSchemaVersion) != kBenchSchemaVersion) {
      throw Error(ErrorKind::kSchemaVersion, "unsupported bench record schema_version");
    }
    BenchRecord r;
    r.id = j.at("id").get<std::string>();
    r.category = parse_category(j.at("category").get<std::string>());
    r.source_text = j.at("source_text").get<std::string>();
    r.factual_text = j.at("factual_text").get<std::string>();
    r.falsified_text = j.at("falsified_text").get<std::string>();
    for (const auto& c : j.at("claims")) {
      BenchClaim claim{c.at("text").get<std::string>(), parse_label(c.at("label").get<std::string>()), {}};
      if (c.contains("perturbation") && !c["perturbation"].is_null()) {
        claim.perturbation = perturbation_meta_from_json(c["perturbation"]);
      }
      r.claims.push_back(std::move(claim));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("bench record: ") + e.what());
  }
}

namespace {

json parse_line(const std::string& line, const fs::path& path, size_t n) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(n) + ": " + e.what());
  }
}

}  // namespace

std::vector<BenchRecord> read_records(const fs::path& path) {
  std::vector<BenchRecord> out;
  size_t n = 0;
  for (const auto& line : read_lines(path)) out.push_back(BenchRecord::from_json(parse_line(line, path, ++n)));
  return out;
}

void write_records(const fs::path& path, const std::vector<BenchRecord>& records) {
  std::string body;
  for (const auto& r : records) body += r.to_json().dump() + "\n";
  write_file(path, body);
}

std::vector<Passage> read_passages(const fs::path& path) {
  std::vector<Passage> out;
  std::set<std::string> ids;
  size_t n = 0;
  for (const auto& line : read_lines(path)) {
    json j = parse_line(line, path, ++n);
    const std::string where = path.string() + ":" + std::to_string(n);
    try {
      Passage p{j.at("id").get<std::string>(), parse_category(j.at("category").get<std::string>()),
                j.at("text").get<std::string>()};
      if (text::trim(p.id).empty()) throw Error(ErrorKind::kInvalidInput, where + ": empty id");
      if (text::trim(p.text).empty()) throw Error(ErrorKind::kInvalidInput, where + ": empty text");
      if (!ids.insert(p.id).second) throw Error(ErrorKind::kDuplicateId, where + ": duplicate id " + p.id);
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
  }
  return out;
}

void write_passages(const fs::path& path, const std::vector<Passage>& passages) {
  std::string body;
  for (const auto& p : passages) {
    body += json{{"id", p.id}, {"category", std::string(to_string(p.category))}, {"text", p.text}}.dump() + "\n";
  }
  write_file(path, body);
}

uint64_t record_seed(uint64_t global_seed, std::string_view record_id) {
  return mix_seed(global_seed, fnv1a64(record_id));
}

namespace {

std::string token_form(std::string_view s) {
  return " " + text::join(text::tokenize(s), " ") + " ";
}

bool states(std::string_view passage, std::string_view claim) {
  return token_form(passage).find(token_form(claim)) != std::string::npos;
}

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "- " + s + "\n";
  return out;
}

}  // namespace

bool template_containment_holds(const BenchRecord& record, std::string* why) {
  auto fail = [&](std::string reason) {
    if (why) *why = std::move(reason);
    return false;
  };
  for (const auto& c : record.claims) {
    if (c.label != Label::kFalsified) continue;
    if (states(record.factual_text, c.text)) {
      return fail("factual text states the falsified claim: " + c.text);
    }
    if (!states(record.falsified_text, c.text)) {
      return fail("falsified text does not state the falsified claim: " + c.text);
    }
    const std::string& original = c.perturbation->original_claim;
    if (!states(c.text, original) && states(record.falsified_text, original)) {
      return fail("falsified text still states the original claim: " + original);
    }
  }
  return true;
}

Curation curate(const Passage& passage, uint64_t seed, const LlmClient& client,
                const CurateOptions& options) {
  if (text::trim(passage.text).empty()) {
    throw Error(ErrorKind::kInvalidInput, "passage " + passage.id + " is empty");
  }
  if (options.falsify_count == 0) throw Error(ErrorKind::kInvalidInput, "falsify_count must be >= 1");
  const EntityOntology& ontology = options.ontology ? *options.ontology : EntityOntology::builtin();

  Curation out;
  size_t sentences = text::split_sentences(passage.text).size();
  if (sentences < kMinSentences || sentences > kMaxSentences) {
    out.warnings.push_back("passage " + passage.id + " has " + std::to_string(sentences) +
                           " sentences; expected between " + std::to_string(kMinSentences) +
                           " and " + std::to_string(kMaxSentences));
  }

  json extracted = client.complete(PromptRole::kCurateExtract, {{"passage", passage.text}});
  std::vector<std::string> claims;
  std::set<std::string> seen;
  for (const auto& item : extracted) {
    auto c = text::trim(item.get<std::string>());
    if (!c.empty() && seen.insert(text::normalize_claim(c)).second) claims.push_back(std::move(c));
  }
  if (claims.empty()) {
    throw Error(ErrorKind::kExtractionFailed, "no claims extracted from passage " + passage.id);
  }

  size_t k = options.falsify_count;
  if (k > claims.size()) {
    out.warnings.push_back("passage " + passage.id + " has only " + std::to_string(claims.size()) +
                           " claims; falsifying all of them");
    k = claims.size();
  }
  SeededRng rng(seed);
  std::vector<size_t> order(claims.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
  }
  std::vector<size_t> chosen(order.begin(), order.begin() + static_cast<long>(k));
  std::sort(chosen.begin(), chosen.end());

  BenchRecord& record = out.record;
  record.id = passage.id;
  record.category = passage.category;
  record.source_text = passage.text;
  for (const auto& c : claims) record.claims.push_back({c, Label::kFactual, std::nullopt});
  std::vector<std::string> originals, falsified;
  for (size_t idx : chosen) {
    auto ops = applicable_operators(claims[idx], ontology);
    FalsifyOperator op = ops[rng.uniform_index(ops.size())];
    Falsification f = falsify(claims[idx], op, rng.next(), ontology);
    record.claims[idx] = {f.text, Label::kFalsified, f.meta};
    originals.push_back(claims[idx]);
    falsified.push_back(f.text);
  }

  json paraphrase = client.complete(PromptRole::kCurateParaphrase,
                                    {{"passage", passage.text}, {"claims", bullet_list(claims)}});
  record.factual_text = text::trim(paraphrase["text"].get<std::string>());
  const std::string original_var = k == 1 ? originals[0] : bullet_list(originals);
  const std::string falsified_var = k == 1 ? falsified[0] : bullet_list(falsified);
  json alternative = client.complete(PromptRole::kCurateAlternative, {{"text", record.factual_text},
                                                                     {"original_claim", original_var},
                                                                     {"falsified_claim", falsified_var}});
  record.falsified_text = text::trim(alternative["text"].get<std::string>());
  try {
    record.validate(k);
  } catch (const Error& e) {
    throw Error(ErrorKind::kCurationFailed, e.what());
  }

  if (options.containment == ContainmentCheck::kTemplate) {
    std::string why;
    if (!template_containment_holds(record, &why)) {
      throw Error(ErrorKind::kCurationFailed, "passage " + passage.id + ": " + why);
    }
  } else {
    json verdict = client.complete(PromptRole::kCurateFalsify,
                                   {{"factual_text", record.factual_text},
                                    {"falsified_text", record.falsified_text},
                                    {"original_claim", original_var},
                                    {"falsified_claim", falsified_var}});
    if (!verdict["consistent"].get<bool>()) {
      throw Error(ErrorKind::kCurationFailed,
                  "passage " + passage.id + ": " + verdict["reason"].get<std::string>());
    }
  }
  return out;
}

std::vector<Curation> curate_all(const std::vector<Passage>& passages, uint64_t global_seed,
                                 const LlmClient& client, const CurateOptions& options, int jobs) {
  std::vector<Curation> out(passages.size());
  parallel_for(passages.size(), jobs, [&](size_t i) {
    out[i] = curate(passages[i], record_seed(global_seed, passages[i].id), client, options);
  });
  return out;
}

double GroupStats::avg_tokens() const {
  return num_texts == 0 ? 0.0 : static_cast<double>(total_tokens) / static_cast<double>(num_texts);
}

double GroupStats::positive_rate() const {
  return num_claims == 0 ? 0.0 : static_cast<double>(num_factual) / static_cast<double>(num_claims);
}

GroupStats& GroupStats::operator+=(const GroupStats& other) {
  num_texts += other.num_texts;
  num_claims += other.num_claims;
  num_factual += other.num_factual;
  total_tokens += other.total_tokens;
  return *this;
}

double DatasetStats::category_mean(double (*metric)(const GroupStats&)) const {
  double sum = 0;
  size_t n = 0;
  for (const auto& [cat, g] : per_category) {
    if (g.num_texts == 0) continue;
    sum += metric(g);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

json group_json(const GroupStats& g) {
  return {{"num_texts", g.num_texts},       {"num_claims", g.num_claims},
          {"num_factual", g.num_factual},   {"total_tokens", g.total_tokens},
          {"avg_tokens", g.avg_tokens()},   {"positive_rate", g.positive_rate()}};
}

}  // namespace

json DatasetStats::to_json() const {
  json cats = json::object();
  for (const auto& [cat, g] : per_category) cats[std::string(to_string(cat))] = group_json(g);
  json mean = {
      {"num_texts", category_mean([](const GroupStats& g) { return static_cast<double>(g.num_texts); })},
      {"num_claims", category_mean([](const GroupStats& g) { return static_cast<double>(g.num_claims); })},
      {"avg_tokens", category_mean([](const GroupStats& g) { return g.avg_tokens(); })},
      {"positive_rate", category_mean([](const GroupStats& g) { return g.positive_rate(); })}};
  return {{"categories", std::move(cats)}, {"overall", group_json(overall)}, {"category_mean", std::move(mean)}};
}

DatasetStats stats(const std::vector<BenchRecord>& records) {
  DatasetStats s;
  for (auto c : kAllCategories) s.per_category[c] = {};
  for (const auto& r : records) {
    GroupStats g;
    g.num_texts = 1;
    g.num_claims = r.claims.size();
    g.num_factual = r.claims.size() - r.falsified_count();
    g.total_tokens = text::split_whitespace(r.factual_text).size();
    s.per_category[r.category] += g;
    s.overall += g;
  }
  return s;
}

DatasetStats merge(const DatasetStats& a, const DatasetStats& b) {
  DatasetStats s = a;
  for (const auto& [cat, g] : b.per_category) s.per_category[cat] += g;
  s.overall += b.overall;
  return s;
}

std::map<std::string, double> table_row_means(const json& table) {
  try {
    const size_t width = table.at("categories").size();
    if (width == 0) throw Error(ErrorKind::kInvalidInput, "table has no categories");
    std::map<std::string, double> out;
    for (const auto& [metric, row] : table.at("rows").items()) {
      if (row.size() != width) {
        throw Error(ErrorKind::kInvalidInput, "row " + metric + " has " + std::to_string(row.size()) +
                                                  " values for " + std::to_string(width) + " categories");
      }
      double sum = 0;
      for (const auto& v : row) sum += v.get<double>();
      out[metric] = sum / static_cast<double>(width);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("summary table: ") + e.what());
  }
}

std::map<std::string, std::string> read_category_map(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kInvalidInput, path.string() + ": expected an object");
  std::map<std::string, std::string> out;
  for (const auto& [type, cat] : doc.items()) {
    out[text::to_lower(text::trim(type))] = std::string(to_string(parse_category(cat.get<std::string>())));
  }
  return out;
}

IngestResult ingest_qa(const fs::path& input, const std::map<std::string, std::string>& type_to_category) {
  std::map<std::string, Category> mapping;
  for (const auto& [type, cat] : type_to_category) mapping[text::to_lower(text::trim(type))] = parse_category(cat);
  IngestResult out;
  std::set<std::string> ids;
  size_t n = 0;
  for (const auto& line : read_lines(input)) {
    json j = parse_line(line, input, ++n);
    const std::string type = j.value("question_type", "");
    std::string body = j.contains("answer") ? j["answer"].get<std::string>() : j.value("text", "");
    auto it = mapping.find(text::to_lower(text::trim(type)));
    if (it == mapping.end() || text::trim(body).empty()) {
      ++out.skipped_types[type];
      continue;
    }
    std::string id = j.contains("id") ? j["id"].get<std::string>() : "qa-" + std::to_string(n);
    if (!ids.insert(id).second) throw Error(ErrorKind::kDuplicateId, "duplicate id " + id);
    out.passages.push_back({std::move(id), it->second, text::trim(body)});
  }
  return out;
}

}  // namespace claimtree
