#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "volfilter/models.hpp"
#include "volfilter/random.hpp"

namespace volfilter {

struct SimConfig {
  ModelSpec spec;
  std::size_t n_steps = 0;
  double dt = 1.0;  ///< days
  Seed seed = 0;
  /// Initial latent value; nullopt draws Y(0) from the stationary law.
  std::optional<double> y0;
  double x0 = 0.0;

  void validate() const;
};

/// Joint (X, Y) trajectory. All three series have n_steps + 1 entries and
/// sigma[i] is the reported volatility |f(y[i])|.
struct SimPath {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;
  SimConfig config;

  std::size_t size() const noexcept { return x.size(); }
  /// Increments x[i+1] - x[i].
  std::vector<double> increments() const;
};

/// One Euler step
///   x' = x + f(y) eps1 sqrt(dt)
///   y' = y - g(y) dt + h(y) eps2 sqrt(dt)
/// A negative Heston y' is reflected to |y'|.
std::pair<double, double> step(const ModelSpec& spec, double x, double y, double dt, double eps1,
                               double eps2);

/// Draw from the stationary latent law (Gaussian or Gamma).
double stationary_draw(const ModelSpec& spec, NormalStream& rng);

SimPath simulate_path(const SimConfig& config);

/// Relaxation burn-in, ceil(10 / alpha) steps of one day.
std::size_t burn_in_steps(const ModelSpec& spec);

}  // namespace volfilter
