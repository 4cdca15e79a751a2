// Seeded random streams with named-substream derivation.
//
// Every random quantity in the library is drawn from a Stream derived from a
// master seed, a stream name and integer indices. Tasks that may execute in
// parallel (grid points, bootstrap replicates, per-unit Gibbs updates) each
// own a pre-derived stream, so results are identical for any worker count.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace rbci::rng {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += kGolden;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + kGolden + (a << 6) + (a >> 2));
  return splitmix64(x);
}

// xoshiro256++ seeded through splitmix64.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) {
    for (auto& w : state_) w = splitmix64(seed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform draw on (0, 1].
  double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Gamma(shape, rate), Marsaglia-Tsang.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double boost = std::pow(uniform(), 1.0 / shape);
      return gamma(shape + 1.0, rate) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() <= p; }

  /// Rademacher sign in {-1, +1}.
  double sign() { return (next() & 1u) ? 1.0 : -1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  std::array<std::uint64_t, 4> state_;
};

/// Derive a child seed for stream `name` with optional integer indices.
inline std::uint64_t derive(std::uint64_t seed, std::string_view name,
                            std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = mix(seed, fnv1a(name));
  for (std::uint64_t v : indices) h = mix(h, v + 1);
  return h;
}

inline Stream substream(std::uint64_t seed, std::string_view name,
                        std::initializer_list<std::uint64_t> indices = {}) {
  return Stream(derive(seed, name, indices));
}

}  // namespace rbci::rng
