#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace klent {

// splitmix64 finalizer, used to derive independent seed streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a) { return mix64(seed ^ mix64(a)); }
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix64(derive_seed(seed, a) ^ mix64(b));
}

// Deterministic RNG wrapper. mt19937_64's raw stream is pinned by the
// standard; all distributions here are hand-rolled so that sampled values
// are identical across platforms and library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<int>(r % un);
  }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Sample an index from `probs` restricted to `support` (inverse CDF).
  // Probabilities over the support are assumed to sum to ~1.
  int sample(const std::vector<double>& probs, const std::vector<int>& support) {
    if (support.empty()) throw std::invalid_argument("sample: empty support");
    const double u = uniform();
    double cum = 0.0;
    for (int a : support) {
      cum += probs[static_cast<size_t>(a)];
      if (u < cum) return a;
    }
    return support.back();  // cum may fall epsilon short of 1
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace klent
