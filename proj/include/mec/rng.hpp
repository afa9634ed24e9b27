#pragma once
// Seedable, splittable 64-bit RNG used across the toolkit.  The standard
// library's distributions are implementation-defined, which would make
// simulation results differ across toolchains; everything here is pinned
// bit-for-bit so results are reproducible anywhere.
#include <cmath>
#include <cstdint>
#include <limits>

namespace mec {

// splitmix64 (Steele, Lea, Flood): tiny state, passes BigCrush, and mixes
// arbitrary seeds well, which is exactly what per-stream key derivation needs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Exponential with the given rate; +inf for rate <= 0 (an event that never
  // fires), which lets callers schedule optional streams unconditionally.
  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    // -log1p(-u) is exact for u near 0 and never sees log(0) since u < 1.
    return -std::log1p(-uniform01()) / rate;
  }

 private:
  std::uint64_t state_;
};

// Fixed key derivation for substreams: device counts or sweep sizes must not
// perturb the stream any other consumer sees.  Two mixing rounds decorrelate
// master/salt pairs that differ in a single bit.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  SplitMix64 g(master ^ (0x632be59bd9b4e019ULL * (salt + 1)));
  g.next();
  return g.next();
}

}  // namespace mec
