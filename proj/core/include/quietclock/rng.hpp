#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace quietclock {

// Deterministic per-period uniform source. std::mt19937_64 is fully specified
// by the standard, and the [0,1) conversion below keeps the top 53 bits, so a
// (seed, draw index) pair maps to the same double on every conforming platform.
class Rng {
 public:
  static constexpr std::string_view kAlgorithmId = "mt19937_64+top53";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of sweep cell `index`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ splitmix64(index);
}

}  // namespace quietclock
