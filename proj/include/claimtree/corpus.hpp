#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "claimtree/evidence.hpp"

namespace claimtree {

struct CorpusDocument {
  std::string id;
  std::string title;
  std::string body;
  SourceTier tier = SourceTier::kUnknown;

  bool operator==(const CorpusDocument&) const = default;
};

// One {id, title, body, tier} object per line.
std::vector<CorpusDocument> read_corpus_jsonl(const std::filesystem::path& path);

struct SearchHit {
  size_t doc = 0;  // index into documents()
  double score = 0.0;
  size_t matched_terms = 0;
};

// In-memory inverted index over title + body with BM25 scoring.
//
// Retrieval is conjunctive first: when some documents contain every content
// word of the query only those are returned; otherwise every document that
// contains at least one query word is. Hits are ordered by matched-term count,
// then BM25 score, then corpus order.
class CorpusIndex {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  CorpusIndex() = default;
  // Throws kDuplicateId on repeated ids and kInvalidInput on blank ids.
  static CorpusIndex build(std::vector<CorpusDocument> documents);
  static CorpusIndex load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<SearchHit> search(std::string_view query, size_t max_results) const;

  const std::vector<CorpusDocument>& documents() const { return documents_; }
  size_t size() const { return documents_.size(); }

  // BM25 weight of one term occurrence count in one document.
  double bm25(size_t term_frequency, size_t document_frequency, size_t doc_length) const;

 private:
  void index_document(size_t doc);

  std::vector<CorpusDocument> documents_;
  std::vector<size_t> doc_lengths_;
  double avg_length_ = 0.0;
  // term -> (doc index, term frequency), ascending doc index
  std::map<std::string, std::vector<std::pair<size_t, size_t>>, std::less<>> postings_;
};

// Tokens an indexed document contributes: content words of title and body.
std::vector<std::string> index_terms(const CorpusDocument& doc);

}  // namespace claimtree
