#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace stfnet {

/// splitmix64 finalizer; used to derive seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Seeded generator whose derived draws are bit-identical across standard
/// libraries (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (no cached second draw).
  double normal();
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream keyed by `stream` and the construction seed;
  /// does not advance this generator.
  Rng fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace stfnet
