#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimtree/falsify.hpp"
#include "claimtree/llm.hpp"

namespace claimtree {

enum class Category {
  kPathophysiology,
  kMedication,
  kDiagnosis,
  kSymptom,
  kTreatment,
  kPrevention,
};

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::kPathophysiology, Category::kMedication, Category::kDiagnosis,
    Category::kSymptom,         Category::kTreatment,  Category::kPrevention};

std::string_view to_string(Category category);
// Case-insensitive.
Category parse_category(std::string_view name);

enum class Label { kFactual, kFalsified };

std::string_view to_string(Label label);
Label parse_label(std::string_view name);

struct BenchClaim {
  std::string text;
  Label label = Label::kFactual;
  std::optional<PerturbationMeta> perturbation;

  bool operator==(const BenchClaim&) const = default;
};

inline constexpr int kBenchSchemaVersion = 1;

struct BenchRecord {
  std::string id;
  Category category = Category::kPathophysiology;
  std::string source_text;
  std::string factual_text;
  std::string falsified_text;
  std::vector<BenchClaim> claims;

  size_t falsified_count() const;
  // Throws kInvariantViolation unless exactly `expected_falsified` claims are
  // Falsified (each carrying perturbation metadata) and the two texts differ.
  void validate(size_t expected_falsified = 1) const;

  json to_json() const;
  static BenchRecord from_json(const json& j);

  bool operator==(const BenchRecord&) const = default;
};

std::vector<BenchRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<BenchRecord>& records);

struct Passage {
  std::string id;
  Category category = Category::kPathophysiology;
  std::string text;
};

// JSONL {id, category, text}; ids must be unique.
std::vector<Passage> read_passages(const std::filesystem::path& path);

enum class ContainmentCheck {
  kTemplate,  // string rules on normalized token sequences
  kModel,     // the model judges the text pair
};

struct CurateOptions {
  size_t falsify_count = 1;
  ContainmentCheck containment = ContainmentCheck::kTemplate;
  const EntityOntology* ontology = nullptr;  // builtin when null
};

struct Curation {
  BenchRecord record;
  std::vector<std::string> warnings;
};

inline constexpr size_t kMinSentences = 5;
inline constexpr size_t kMaxSentences = 60;

// Per-record seed; independent of the order records are processed in.
uint64_t record_seed(uint64_t global_seed, std::string_view record_id);

// Extracts claims, falsifies `falsify_count` of them chosen uniformly at
// random, then asks the model for a factual paraphrase and the alternative
// text carrying the falsified claims. `seed` drives every random choice.
Curation curate(const Passage& passage, uint64_t seed, const LlmClient& client,
                const CurateOptions& options = {});

// Curates each passage with record_seed(global_seed, id) on up to `jobs`
// threads. Output order follows the input.
std::vector<Curation> curate_all(const std::vector<Passage>& passages, uint64_t global_seed,
                                 const LlmClient& client, const CurateOptions& options = {},
                                 int jobs = 1);

// True when the text pair passes the string containment rules: the factual
// text does not state any falsified claim, the falsified text states every
// falsified claim and no longer states an original claim it replaced.
bool template_containment_holds(const BenchRecord& record, std::string* why = nullptr);

struct GroupStats {
  size_t num_texts = 0;
  size_t num_claims = 0;
  size_t num_factual = 0;
  size_t total_tokens = 0;  // whitespace tokens of factual_text

  double avg_tokens() const;     // per text; 0 when empty
  double positive_rate() const;  // factual claims / claims; 0 when empty

  GroupStats& operator+=(const GroupStats& other);
  bool operator==(const GroupStats&) const = default;
};

struct DatasetStats {
  std::map<Category, GroupStats> per_category;  // all six categories
  GroupStats overall;

  // Unweighted mean over categories that have texts.
  double category_mean(double (*metric)(const GroupStats&)) const;

  json to_json() const;
};

DatasetStats stats(const std::vector<BenchRecord>& records);
DatasetStats merge(const DatasetStats& a, const DatasetStats& b);

// Published-style summary table: {"categories": [...], "rows": {metric: [..]}}.
// Returns the unweighted mean of each row.
std::map<std::string, double> table_row_means(const json& table);

// Question-answer ingestion: maps a question type to a category through a
// user-editable JSON object {"question type": "Category"}. Input lines carry
// {id, question_type, answer} (or "text"); rows whose type is unmapped are
// skipped and counted.
struct IngestResult {
  std::vector<Passage> passages;
  std::map<std::string, size_t> skipped_types;
};
IngestResult ingest_qa(const std::filesystem::path& input,
                       const std::map<std::string, std::string>& type_to_category);
std::map<std::string, std::string> read_category_map(const std::filesystem::path& path);
void write_passages(const std::filesystem::path& path, const std::vector<Passage>& passages);

}  // namespace claimtree
