#pragma once

#include <cstdint>
#include <random>

namespace wqed {

/// SplitMix64 finalizer. Used only to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of a child stream: splitmix64(parent ^ splitmix64(index + 1)).
///
/// Substreams are derived hierarchically, master -> realization -> trajectory,
/// so a work item's randomness depends only on its coordinates and never on
/// scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 1));
}

/// Seedable 64-bit generator (mt19937_64 underneath) with portable uniform draws.
///
/// std::uniform_real_distribution is implementation defined, so doubles are
/// built directly from the top 53 bits to keep outputs identical across
/// standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t seed() const noexcept { return seed_; }

  Rng substream(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline Rng realization_stream(std::uint64_t master, std::uint64_t realization) {
  return Rng(derive_seed(master, realization));
}

inline Rng trajectory_stream(std::uint64_t master, std::uint64_t realization,
                             std::uint64_t trajectory) {
  return Rng(derive_seed(derive_seed(master, realization), (1ULL << 32) + trajectory));
}

}  // namespace wqed
