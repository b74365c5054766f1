#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace claimtree {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Stable 64-bit hash of a string (FNV-1a); used to derive per-record seeds.
uint64_t fnv1a64(std::string_view data);

// SplitMix64 finalizer.
uint64_t mix_seed(uint64_t a, uint64_t b);

// Portable seeded RNG. The engine of std::mt19937_64 is fully specified by
// the standard, the library distributions are not, so bounded draws are done
// here: reject raw outputs >= max - max % n, then reduce modulo n.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n). n must be positive.
  uint64_t uniform_index(uint64_t n);
  uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

void append_file(const std::filesystem::path& path, std::string_view contents);

// Non-empty lines of a JSONL file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace claimtree
