#ifndef HEADFILT_RANDOM_H_
#define HEADFILT_RANDOM_H_

#include <cstdint>
#include <random>

namespace headfilt {

// Seeded generator whose output sequence is identical across standard
// libraries: only the raw mt19937_64 stream is used, never the
// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix(seed)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n), unbiased.
  uint64_t index(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Derives an independent stream, e.g. per training stage.
  Rng fork(uint64_t salt) { return Rng(next_u64() ^ mix(salt)); }

  static uint64_t mix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace headfilt

#endif  // HEADFILT_RANDOM_H_
