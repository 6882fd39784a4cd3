#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace benh {

// Deterministic, platform-independent PRNG. All randomness in the tool is
// derived from one user-visible seed through keyed streams, so adding or
// reordering draws in one stream never shifts another.
class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state ? state : 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; no rejection, so draw count is input-independent.
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample k distinct indices from [0, n), in selection order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over the key parts; used to derive independent stream seeds.
class RngKey {
 public:
  explicit RngKey(uint64_t seed) { mix(seed); }

  RngKey& mix(uint64_t v) {
    for (int i = 0; i < 8; ++i) step(uint8_t(v >> (8 * i)));
    return *this;
  }
  RngKey& mix(std::string_view tag) {
    for (char c : tag) step(uint8_t(c));
    step(0xff);  // terminator so ("ab","c") != ("a","bc")
    return *this;
  }

  Rng rng() const { return Rng(h_); }

 private:
  void step(uint8_t b) {
    h_ ^= b;
    h_ *= 0x100000001b3ull;
  }
  uint64_t h_ = 0xcbf29ce484222325ull;
};

inline Rng derive_rng(uint64_t seed, std::string_view tag) {
  return RngKey(seed).mix(tag).rng();
}
inline Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t a) {
  return RngKey(seed).mix(tag).mix(a).rng();
}
inline Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b) {
  return RngKey(seed).mix(tag).mix(a).mix(b).rng();
}
inline Rng derive_rng(uint64_t seed, std::string_view tag, std::string_view a) {
  return RngKey(seed).mix(tag).mix(a).rng();
}
inline Rng derive_rng(uint64_t seed, std::string_view tag, std::string_view a, uint64_t b) {
  return RngKey(seed).mix(tag).mix(a).mix(b).rng();
}
inline Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b, uint64_t c) {
  return RngKey(seed).mix(tag).mix(a).mix(b).mix(c).rng();
}

inline std::vector<size_t> Rng::sample_without_replacement(size_t n, size_t k) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + size_t(below(uint64_t(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace benh
