#include "claimtree/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {
namespace {

constexpr int kIndexSchemaVersion = 1;

CorpusDocument document_from_json(const json& j) {
  CorpusDocument doc;
  doc.id = j.at("id").get<std::string>();
  doc.title = j.at("title").get<std::string>();
  doc.body = j.at("body").get<std::string>();
  doc.tier = source_tier_from_json(j.at("tier"));
  return doc;
}

}  // namespace

std::vector<CorpusDocument> read_corpus_jsonl(const std::filesystem::path& path) {
  std::vector<CorpusDocument> docs;
  size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse,
                  path.string() + " record " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<std::string> index_terms(const CorpusDocument& doc) {
  std::vector<std::string> terms;
  for (auto& token : text::tokenize(doc.title + " " + doc.body)) {
    if (!text::is_stopword(token)) terms.push_back(std::move(token));
  }
  return terms;
}

CorpusIndex CorpusIndex::build(std::vector<CorpusDocument> documents) {
  CorpusIndex index;
  std::set<std::string> ids;
  for (const auto& doc : documents) {
    if (text::trim(doc.id).empty()) throw Error(ErrorKind::kInvalidInput, "corpus document without id");
    if (!ids.insert(doc.id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate corpus document id '" + doc.id + "'");
    }
  }
  index.documents_ = std::move(documents);
  double total = 0;
  for (size_t i = 0; i < index.documents_.size(); ++i) {
    index.index_document(i);
    total += static_cast<double>(index.doc_lengths_.back());
  }
  index.avg_length_ = index.documents_.empty() ? 0.0 : total / static_cast<double>(index.documents_.size());
  return index;
}

void CorpusIndex::index_document(size_t doc) {
  auto terms = index_terms(documents_[doc]);
  doc_lengths_.push_back(terms.size());
  std::map<std::string, size_t> counts;
  for (auto& t : terms) ++counts[std::move(t)];
  for (auto& [term, tf] : counts) postings_[term].emplace_back(doc, tf);
}

double CorpusIndex::bm25(size_t term_frequency, size_t document_frequency,
                         size_t doc_length) const {
  const double n = static_cast<double>(documents_.size());
  const double df = static_cast<double>(document_frequency);
  const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  const double tf = static_cast<double>(term_frequency);
  const double norm = avg_length_ > 0 ? static_cast<double>(doc_length) / avg_length_ : 1.0;
  return idf * tf * (kK1 + 1.0) / (tf + kK1 * (1.0 - kB + kB * norm));
}

std::vector<SearchHit> CorpusIndex::search(std::string_view query, size_t max_results) const {
  auto terms = text::content_word_sequence(query);
  if (terms.empty() || documents_.empty()) return {};

  std::unordered_map<size_t, SearchHit> hits;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const auto& [doc, tf] : it->second) {
      auto& hit = hits[doc];
      hit.doc = doc;
      hit.score += bm25(tf, it->second.size(), doc_lengths_[doc]);
      ++hit.matched_terms;
    }
  }
  std::vector<SearchHit> ranked;
  bool any_complete = std::any_of(hits.begin(), hits.end(), [&](const auto& kv) {
    return kv.second.matched_terms == terms.size();
  });
  for (const auto& [doc, hit] : hits) {
    if (!any_complete || hit.matched_terms == terms.size()) ranked.push_back(hit);
  }
  std::sort(ranked.begin(), ranked.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.matched_terms != b.matched_terms) return a.matched_terms > b.matched_terms;
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
  });
  if (ranked.size() > max_results) ranked.resize(max_results);
  return ranked;
}

void CorpusIndex::save(const std::filesystem::path& path) const {
  json docs = json::array();
  for (const auto& d : documents_) {
    docs.push_back(json{{"id", d.id}, {"title", d.title}, {"body", d.body},
                        {"tier", std::string(to_string(d.tier))}});
  }
  json postings = json::object();
  for (const auto& [term, list] : postings_) {
    json entries = json::array();
    for (const auto& [doc, tf] : list) entries.push_back(json::array({doc, tf}));
    postings[term] = std::move(entries);
  }
  json doc{{"schema_version", kIndexSchemaVersion},
           {"params", {{"k1", kK1}, {"b", kB}}},
           {"documents", std::move(docs)},
           {"doc_lengths", doc_lengths_},
           {"postings", std::move(postings)}};
  write_file(path, doc.dump() + "\n");
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
  CorpusIndex index;
  try {
    json doc = json::parse(read_file(path));
    if (doc.at("schema_version").get<int>() != kIndexSchemaVersion) {
      throw Error(ErrorKind::kSchemaVersion, path.string() + ": unsupported index schema_version");
    }
    for (const auto& d : doc.at("documents")) index.documents_.push_back(document_from_json(d));
    index.doc_lengths_ = doc.at("doc_lengths").get<std::vector<size_t>>();
    for (const auto& [term, entries] : doc.at("postings").items()) {
      auto& list = index.postings_[term];
      for (const auto& e : entries) {
        size_t d = e.at(0).get<size_t>();
        if (d >= index.documents_.size()) {
          throw Error(ErrorKind::kParse, path.string() + ": posting points past the documents");
        }
        list.emplace_back(d, e.at(1).get<size_t>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (index.doc_lengths_.size() != index.documents_.size()) {
    throw Error(ErrorKind::kParse, path.string() + ": doc_lengths does not match documents");
  }
  double total = 0;
  for (size_t len : index.doc_lengths_) total += static_cast<double>(len);
  index.avg_length_ =
      index.documents_.empty() ? 0.0 : total / static_cast<double>(index.documents_.size());
  return index;
}

}  // namespace claimtree
