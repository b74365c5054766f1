#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>

#include "claimtree/error.hpp"
#include "claimtree/parallel.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

using namespace claimtree;
namespace fs = std::filesystem;

TEST(Text, TrimAndNormalize) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_EQ(text::trim(" \t "), "");
  EXPECT_EQ(text::normalize_claim("  Timolol   LOWERS\tIOP "), "timolol lowers iop");
}

TEST(Text, TokenizeSplitsOnNonAlnum) {
  EXPECT_EQ(text::tokenize("HbA1c-levels, (7.5%)"),
            (std::vector<std::string>{"hba1c", "levels", "7", "5"}));
  EXPECT_TRUE(text::tokenize("  ,;  ").empty());
}

TEST(Text, ContentWordsDropStopwords) {
  auto words = text::content_words("The drug lowers the pressure of the eye");
  EXPECT_EQ(words, (std::set<std::string>{"drug", "lowers", "pressure", "eye"}));
  EXPECT_EQ(text::content_word_sequence("eye pressure and the eye"),
            (std::vector<std::string>{"eye", "pressure"}));
}

TEST(Text, SplitSentences) {
  auto s = text::split_sentences("Dose is 2.5 mg. It works! Does it? trailing");
  EXPECT_EQ(s, (std::vector<std::string>{"Dose is 2.5 mg.", "It works!", "Does it?", "trailing"}));
  EXPECT_TRUE(text::split_sentences("   ").empty());
}

TEST(Text, FormatNumber) {
  EXPECT_EQ(text::format_number(25.0), "25");
  EXPECT_EQ(text::format_number(-0.0), "0");
  EXPECT_EQ(text::format_number(0.1), "0.1");
  EXPECT_EQ(text::format_number(2.5), "2.5");
}

TEST(Util, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Util, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Util, MixSeedSpreadsInputs) {
  std::set<uint64_t> seen;
  for (uint64_t a = 0; a < 32; ++a) {
    for (uint64_t b = 0; b < 32; ++b) seen.insert(mix_seed(a, b));
  }
  EXPECT_EQ(seen.size(), 32u * 32u);
}

TEST(Util, UniformIndexReplaysRejectionSampling) {
  for (uint64_t seed : {0ULL, 1ULL, 3ULL, 7ULL, 12345ULL}) {
    for (uint64_t n : {1ULL, 2ULL, 3ULL, 4ULL, 10ULL, 1000003ULL, (1ULL << 63) + 1}) {
      SeededRng rng(seed);
      std::mt19937_64 oracle(seed);
      for (int i = 0; i < 50; ++i) {
        // Accept draws below the largest multiple of n.
        const uint64_t max = std::numeric_limits<uint64_t>::max();
        const uint64_t limit = max - max % n;
        uint64_t x;
        do {
          x = oracle();
        } while (x >= limit);
        ASSERT_EQ(rng.uniform_index(n), x % n) << "seed " << seed << " n " << n;
      }
    }
  }
  SeededRng rng(1);
  EXPECT_THROW(rng.uniform_index(0), Error);
}

TEST(Util, FileRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "claimtree_util_test";
  fs::remove_all(dir);
  write_file(dir / "nested" / "a.txt", "one\ntwo\n");
  append_file(dir / "nested" / "a.txt", "three\n");
  EXPECT_EQ(read_file(dir / "nested" / "a.txt"), "one\ntwo\nthree\n");
  EXPECT_EQ(read_lines(dir / "nested" / "a.txt"), (std::vector<std::string>{"one", "two", "three"}));
  try {
    read_file(dir / "missing.txt");
    FAIL() << "expected an io error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  fs::remove_all(dir);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](size_t i) {
                 if (i == 7) throw Error(ErrorKind::kInvalidInput, "boom");
               }),
               Error);
}
