#pragma once

#include <cstdint>
#include <random>

namespace retmix {

// splitmix64, used to expand a user seed plus stream indices into
// well-separated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic per-task engine: identical (seed, indices) always yield the
// same stream, independent of how work is scheduled across threads.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a = 0,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  std::uint64_t x = splitmix64(s);
  s ^= a * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  x ^= splitmix64(s);
  s ^= b * 0xda942042e4dd58b5ULL + 0x9e3779b97f4a7c15ULL;
  x ^= splitmix64(s);
  s ^= c * 0xca01f9dd4f2b9b6bULL + 0x3c6ef372fe94f82aULL;
  x ^= splitmix64(s);
  return std::mt19937_64(x);
}

}  // namespace retmix
