#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace maxcode {

// FNV-1a 64-bit. Used for prompt/config hashing and seed derivation so that
// logs and replays are stable across runs of the same binary.
inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// Deterministic per-call RNG seed: mixes the run seed with a label
// (problem id) and positional indices (level, branch, round).
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

// Strips trailing whitespace from every line and trailing newlines from the
// end; used for judge-style output comparison.
std::string normalize_output(std::string_view s);

}  // namespace maxcode
