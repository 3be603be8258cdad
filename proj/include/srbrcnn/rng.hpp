#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace srbrcnn {

// splitmix64; the standard finalizer used to spread seed bits.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One top-level seed; every consumer derives its stream from it with a
// fixed scope tag so streams never alias.
namespace seed_scope {
inline constexpr uint64_t kParamInit = 1;
inline constexpr uint64_t kShuffle = 2;
inline constexpr uint64_t kDropout = 3;
inline constexpr uint64_t kCutNodes = 4;
inline constexpr uint64_t kEmbeddingInit = 5;
inline constexpr uint64_t kSplit = 6;
}  // namespace seed_scope

inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
  uint64_t s = splitmix64(base);
  for (uint64_t t : tags) s = splitmix64(s ^ (t + 0x9e3779b97f4a7c15ULL));
  return s;
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

// [0, 1). Shift-based so the value stream is identical on every platform
// (distribution classes are implementation-defined).
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + uniform_unit(rng) * (hi - lo);
}

inline size_t uniform_index(std::mt19937_64& rng, size_t n) {
  return static_cast<size_t>(rng() % n);
}

// Fisher-Yates, hand-rolled for cross-platform determinism.
template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct elements, uniform without replacement, input order not preserved.
template <class T>
std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k, std::mt19937_64& rng) {
  if (k > pool.size()) k = pool.size();
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace srbrcnn
