#include "volfilter/sim.hpp"

#include <cmath>
#include <random>

namespace volfilter {

void SimConfig::validate() const {
  spec.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be > 0");
  if (y0 && spec.kind == ModelKind::Heston && *y0 < 0.0) {
    throw ValidationError("heston y0 must be >= 0");
  }
}

std::vector<double> SimPath::increments() const {
  std::vector<double> dx;
  if (x.size() < 2) return dx;
  dx.reserve(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) dx.push_back(x[i + 1] - x[i]);
  return dx;
}

std::pair<double, double> step(const ModelSpec& spec, double x, double y, double dt, double eps1,
                               double eps2) {
  const double sqrt_dt = std::sqrt(dt);
  const double x_next = x + eval_f(spec, y) * eps1 * sqrt_dt;
  double y_next = y - eval_g(spec, y) * dt + eval_h(spec, y) * eps2 * sqrt_dt;
  if (spec.kind == ModelKind::Heston && y_next < 0.0) y_next = -y_next;
  return {x_next, y_next};
}

double stationary_draw(const ModelSpec& spec, NormalStream& rng) {
  const double scale = spec.latent_scale();
  if (spec.kind == ModelKind::Heston) {
    std::gamma_distribution<double> gamma(spec.heston_shape(), scale);
    return gamma(rng.engine());
  }
  return spec.drift_fixed_point() + std::sqrt(scale) * rng();
}

SimPath simulate_path(const SimConfig& config) {
  config.validate();
  NormalStream rng(config.seed);

  SimPath path;
  path.config = config;
  const std::size_t n = config.n_steps + 1;
  path.x.resize(n);
  path.y.resize(n);
  path.sigma.resize(n);

  double x = config.x0;
  double y = config.y0 ? *config.y0 : stationary_draw(config.spec, rng);
  path.x[0] = x;
  path.y[0] = y;
  path.sigma[0] = reported_vol(config.spec, y);
  for (std::size_t i = 1; i < n; ++i) {
    const double eps1 = rng();
    const double eps2 = rng();
    std::tie(x, y) = step(config.spec, x, y, config.dt, eps1, eps2);
    path.x[i] = x;
    path.y[i] = y;
    path.sigma[i] = reported_vol(config.spec, y);
  }
  return path;
}

std::size_t burn_in_steps(const ModelSpec& spec) {
  return static_cast<std::size_t>(std::ceil(10.0 / spec.params.alpha));
}

}  // namespace volfilter
