#pragma once

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard, and uniforms are built from raw bits, so a given
// seed yields the same draws on every conforming platform.
//
// Stream splitting: independent task i of a run seeded with `master` uses
// Rng::stream(master, i), seeded with splitmix64(master + (i+1) * 0x9E3779B97F4A7C15).

#include <cstdint>
#include <random>

namespace ioncool {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ioncool
