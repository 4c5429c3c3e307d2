#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace adaptrace {

// SplitMix64 output function. Used to turn loosely structured integers
// (seeds, step indices, repetition indices) into well-mixed stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the substream identified by `tag` under `base`. Distinct tags give
// statistically unrelated streams, so consumers never share an engine and the
// order in which substreams are drawn cannot change any of them.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(base ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

/// Deterministic random source. mt19937_64 has a fully specified output
/// sequence, but the standard distribution adaptors do not, so the mappings
/// from raw 64-bit words to uniforms and normals live here. Streams are
/// therefore reproducible across compilers and standard libraries.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  // Standard normal via the Box-Muller transform; the sine partner of each
  // pair is cached and returned on the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // First uniform is shifted into (0, 1] so the log never sees zero.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adaptrace
