#pragma once

#include <cstdint>
#include <random>

#include "polylab/lattice.hpp"

namespace polylab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Top 53 bits to a double in [0, 1).
inline constexpr double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Child seed for stream `index` of purpose `tag` under `master`.
/// Every random quantity in the library is drawn from a stream named this way.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) + index);
}

/// Stream tags. Changing a value changes every downstream artifact.
namespace stream {
inline constexpr std::uint64_t kSite = 0x5173'0001;
inline constexpr std::uint64_t kReplica = 0x5173'0002;
inline constexpr std::uint64_t kAnnealedReplica = 0x5173'0003;
inline constexpr std::uint64_t kPathSample = 0x5173'0004;
inline constexpr std::uint64_t kBootstrap = 0x5173'0005;
inline constexpr std::uint64_t kRandomPath = 0x5173'0006;
}  // namespace stream

/// Per-site uniform: a pure function of (seed, coordinates), so any sub-box
/// regenerates the same values regardless of iteration order.
inline double site_uniform(std::uint64_t seed, const Point& p) {
  const auto enc = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v + (1 << 20))) & 0x1fffff; };
  const std::uint64_t key = enc(p[0]) | (enc(p[1]) << 21) | (enc(p[2]) << 42);
  return to_unit(splitmix64(derive_seed(seed, stream::kSite) ^ splitmix64(key)));
}

/// Sequential generator with platform-independent conversions
/// (std:: distributions are implementation-defined, so they are not used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return to_unit(eng_()); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = eng_(); while (x >= limit);
    return x % n;
  }
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace polylab
