#include "claimtree/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace claimtree::text {
namespace {

// Sorted for binary search.
constexpr std::array<std::string_view, 127> kStopwords = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",
    "also",    "am",      "an",     "and",     "any",     "are",     "as",
    "at",      "be",      "because", "been",   "before",  "being",   "below",
    "between", "both",    "but",    "by",      "can",     "could",   "did",
    "do",      "does",    "doing",  "down",    "during",  "each",    "few",
    "for",     "from",    "further", "had",    "has",     "have",    "having",
    "he",      "her",     "here",   "hers",    "herself", "him",     "himself",
    "his",     "how",     "i",      "if",      "in",      "into",    "is",
    "it",      "its",     "itself", "just",    "may",     "me",      "might",
    "more",    "most",    "must",   "my",      "myself",  "no",      "nor",
    "not",     "now",     "of",     "off",     "on",      "once",    "only",
    "or",      "other",   "our",    "ours",    "out",     "over",    "own",
    "same",    "she",     "should", "so",      "some",    "such",    "than",
    "that",    "the",     "their",  "theirs",  "them",    "then",    "there",
    "these",   "they",    "this",   "those",   "through", "to",      "too",
    "under",   "until",   "up",     "very",    "was",     "we",      "were",
    "what",    "when",    "where",  "which",   "while",   "who",     "whom",
    "why",     "will",    "with",   "would",   "you",     "your",    "yours",
    "yourself"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return std::string(s.substr(begin, end - begin));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalize_claim(std::string_view s) {
  return join(split_whitespace(to_lower(s)), " ");
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : s) {
    if (is_alnum(c)) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_stopword(std::string_view token) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> words;
  for (auto& token : tokenize(s)) {
    if (!is_stopword(token)) words.insert(std::move(token));
  }
  return words;
}

std::vector<std::string> content_word_sequence(std::string_view s) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  for (auto& token : tokenize(s)) {
    if (is_stopword(token) || !seen.insert(token).second) continue;
    words.push_back(std::move(token));
  }
  return words;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) parts.emplace_back(s.substr(start, i - start));
  }
  return parts;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> sentences;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == s.size() || is_space(s[i + 1]))) {
      auto sentence = trim(s.substr(start, i + 1 - start));
      if (!sentence.empty()) sentences.push_back(std::move(sentence));
      start = i + 1;
    }
  }
  auto tail = trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  if (std::isfinite(value) && std::nearbyint(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

}  // namespace claimtree::text
