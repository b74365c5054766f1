#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace claimtree::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase plus whitespace collapsing; the equality used for claim dedup.
std::string normalize_claim(std::string_view s);

// Lowercased alphanumeric runs. Everything else separates tokens.
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view token);

// Distinct non-stopword tokens.
std::set<std::string> content_words(std::string_view s);

// Content words in first-occurrence order, for building keyword queries.
std::vector<std::string> content_word_sequence(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

// Naive sentence splitter on '.', '!' and '?' followed by whitespace.
std::vector<std::string> split_sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal representation that round-trips.
std::string format_number(double value);

}  // namespace claimtree::text
