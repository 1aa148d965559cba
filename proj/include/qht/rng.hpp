#pragma once

#include <cmath>
#include <cstdint>

namespace qht::rng {

inline constexpr const char* generator_id = "splitmix64-counter-v1";

inline constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless draw number `counter` of stream `stream` under `seed`. Every
// value depends only on the triple, so parallel consumers reproduce the
// serial sequence exactly.
inline constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter) {
  return mix(mix(mix(seed) ^ stream) + counter * 0xd1b54a32d192ed03ULL);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(bits(seed, stream, counter) >> 11) * 0x1p-53;
}

// Uniform on (0, 1).
inline double open_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return (static_cast<double>(bits(seed, stream, counter) >> 11) + 0.5) * 0x1p-53;
}

class Stream {
public:
  Stream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return rng::uniform(seed_, stream_, counter_++); }
  double open_uniform() { return rng::open_uniform(seed_, stream_, counter_++); }

  // Box-Muller; uses two draws per call and discards the sine branch so the
  // counter advance stays fixed.
  double normal() {
    const double u1 = open_uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

} // namespace qht::rng
