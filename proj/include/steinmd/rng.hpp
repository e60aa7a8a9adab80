#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace steinmd {

// Purpose tags keep the streams used for different jobs disjoint even when
// they share a master seed and replication index.
enum class StreamTag : std::uint64_t {
  graph = 0x01,
  pair = 0x02,
  field = 0x03,
  pair_local = 0x04,
  oracle = 0x05,
  test = 0x7f,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless key derivation for per-replication streams.
inline std::uint64_t mix_key(std::uint64_t master, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  h = splitmix64(s);
  s = h ^ (tag * 0xaf251af3b0f025b5ULL);
  return splitmix64(s);
}

// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  int rademacher() { return ((*this)() >> 63) ? 1 : -1; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// Box-Muller on the generator's own uniforms, so draws do not depend on the
// standard library's distribution implementation.
inline double standard_normal(Xoshiro256& gen) {
  double u1 = gen.uniform();
  while (u1 <= 0.0) u1 = gen.uniform();
  const double u2 = gen.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Xoshiro256 make_stream(std::uint64_t master, std::uint64_t index, StreamTag tag) {
  return Xoshiro256(mix_key(master, index, static_cast<std::uint64_t>(tag)));
}

// Threshold t with P(u64 < t) = p for a uniform 64-bit draw; p clamped to [0, 1].
inline std::uint64_t bernoulli_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  const long double scaled = static_cast<long double>(p) * 18446744073709551616.0L;
  if (scaled >= 18446744073709551615.0L) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

}  // namespace steinmd
