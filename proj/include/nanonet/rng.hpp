#pragma once

#include <cstdint>
#include <random>

namespace nanonet {

/// SplitMix64 finaliser; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`. Distinct (master, index) pairs give
/// statistically independent streams; the mapping never depends on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on (0, 1]; never returns 0, so log() is always finite.
  double open_closed() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }

  bool operator==(const RandomStream&) const = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace nanonet
