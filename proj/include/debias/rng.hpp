#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace debias {

// SplitMix64 (Steele, Lea, Flood 2014): a well-known, portable 64-bit
// generator defined entirely by integer arithmetic, so two builds on
// different platforms produce identical streams. Child streams are
// derived by remixing the parent seed with the stream index, which keeps
// stream k's draws independent of how many sibling streams exist.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via rejection on the modulus.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal by Marsaglia's polar method (no trig, deterministic
  // rejection loop). The spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Deterministic sub-stream for index `stream` of this generator's seed.
  Rng child(std::uint64_t stream) const {
    std::uint64_t z = state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// One-shot perturbation noise in [-1, 1] keyed on (seed, key); used by the
// spec-perturbation scaffolding so the noise is a pure function of the
// observation identity.
inline double keyed_noise(std::uint64_t seed, std::uint64_t key) {
  Rng r = Rng(seed).child(key);
  return 2.0 * r.uniform01() - 1.0;
}

}  // namespace debias
