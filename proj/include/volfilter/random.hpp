#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace volfilter {

using Seed = std::uint64_t;

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent child seed for stream `index` of `master`. Used for per-window
/// seeding so results do not depend on evaluation order.
constexpr Seed derive_seed(Seed master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x5851f42d4c957f2dULL));
}

/// Child seed keyed by a purpose tag ("decon", "artificial", ...).
Seed derive_seed(Seed master, std::string_view tag) noexcept;

/// Deterministic stream of i.i.d. N(0, 1) draws.
class NormalStream {
 public:
  explicit NormalStream(Seed seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }

  /// Draw with |x| >= min_abs; smaller draws are discarded and redrawn.
  double nonzero(double min_abs) {
    double x = normal_(engine_);
    while (std::abs(x) < min_abs) x = normal_(engine_);
    return x;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::vector<double> gaussian_stream(Seed seed, std::size_t n);

}  // namespace volfilter
