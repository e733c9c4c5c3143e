#pragma once

#include <complex>
#include <cstdint>

namespace binloc {

// splitmix64 finalizer (Vigna). Used both as the generator step and to mix
// seeds into decorrelated substreams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic random stream. Every stochastic choice in the project is
// keyed to a (seed, stream) pair so that parallel generation is
// schedule-independent: each independent work unit owns its own stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(mix64(seed ^ 0x5851F42D4C957F2DULL)) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : state_(mix64(mix64(seed ^ 0x5851F42D4C957F2DULL) + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe to take log of.
  double next_double_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // Unbiased enough for n << 2^32 (bias < 2^-32), and fully deterministic.
  std::uint32_t next_below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. No spare caching: draw order stays a
  // pure function of the call sequence.
  double normal() {
    double u1 = next_double_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Circularly-symmetric complex normal with E|z|^2 = 1.
  std::complex<double> complex_normal() {
    double u1 = next_double_open();
    double u2 = next_double();
    double r = std::sqrt(-std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::uint64_t state_;
};

}  // namespace binloc
