#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace cltlab {

// Deterministic random streams.
//
// All randomness in the project flows through RngStream (xoshiro256++ with
// splitmix64 state derivation). Standard-library distributions are avoided on
// purpose: their output is implementation defined, and every report here must
// be reproducible bit for bit from (seed, stream index) alone.
//
// Stream derivation is counter based: stream i of root seed s mixes
// (s, domain, i) through splitmix64, so an ensemble of N members can be
// mapped onto any number of workers without changing a single draw.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class RngStream {
public:
  RngStream() : RngStream(0, 0, 0) {}

  RngStream(std::uint64_t root_seed, std::uint64_t domain, std::uint64_t index) {
    std::uint64_t sm = root_seed;
    sm ^= 0xD2B74407B1CE6E93ull * (domain + 1);
    sm ^= 0xCA5A826395121157ull * (index + 1);
    for (auto& word : s_) word = splitmix64_next(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x1ull; // never all-zero
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 significant bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal, Box-Muller. One value per call; the partner draw is
  // discarded to keep the stream layout independent of call parity.
  double normal() {
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t next_below(std::uint64_t n) {
    // Rejection-free modulo is fine here; n is tiny compared to 2^64.
    return next_u64() % n;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// Factory for the per-member streams of one logical operation. `domain`
// separates operations running under the same root seed, so e.g. the mean
// estimate and the ensemble of a correlation run never share draws.
struct StreamFactory {
  std::uint64_t root = 0;
  std::uint64_t domain = 0;

  RngStream stream(std::uint64_t index) const { return RngStream(root, domain, index); }
  StreamFactory subdomain(std::uint64_t shift) const {
    return StreamFactory{root, domain * 0x100ull + shift + 1};
  }
};

} // namespace cltlab
