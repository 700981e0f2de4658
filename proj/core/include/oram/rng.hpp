#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace oram {

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard;
// bounded draws below avoid std::uniform_int_distribution, whose mapping is
// implementation-defined, so streams replay bit-identically everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(splitmix(seed)) {}
  Rng(uint64_t seed, uint64_t stream) : engine_(splitmix(seed ^ splitmix(stream * 0x9e3779b97f4a7c15ull + 1))) {}

  uint64_t u64() { return engine_(); }

  // Uniform in [0, n). Rejection sampling keeps it unbiased.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Uniform leaf index over a tree of the given depth.
  uint64_t leaf(uint32_t depth) {
    if (depth == 0) return 0;
    if (depth >= 64) return engine_();
    return engine_() & ((1ull << depth) - 1);
  }

  double unit() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace oram
