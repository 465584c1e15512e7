#include "volfilter/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

namespace volfilter {

namespace {

VolSeries vol_like(const ReturnSeries& returns, std::string name) {
  VolSeries vol;
  vol.sigma.resize(returns.size());
  vol.estimator = std::move(name);
  vol.dates = returns.dates;
  return vol;
}

// Penalty terms of one candidate point with volatility v = f(y). The fused
// scorer below uses f(Ybar) == v directly instead of re-evaluating f.
template <ModelKind K>
struct Kernel;

template <>
struct Kernel<ModelKind::ExpOU> {
  static double latent(const ModelParams& p, double v) { return std::log(v / p.m); }
  static double drift(const ModelParams& p, double y) { return p.alpha * y; }
  static double diffusion(const ModelParams& p, double, double) { return p.k; }
};

template <>
struct Kernel<ModelKind::OU> {
  static double latent(const ModelParams&, double v) { return v; }
  static double drift(const ModelParams& p, double y) { return p.alpha * (y - p.m); }
  static double diffusion(const ModelParams& p, double, double) { return p.k; }
};

template <>
struct Kernel<ModelKind::Heston> {
  static double latent(const ModelParams&, double v) { return v * v; }
  static double drift(const ModelParams& p, double y) { return p.alpha * (y - p.m); }
  // h(y) = k sqrt(y) = k v
  static double diffusion(const ModelParams& p, double, double v) { return p.k * v; }
};

struct Scratch {
  std::vector<double> noise;
  std::vector<double> vol;
  std::vector<double> latent;
  std::vector<double> best;
};

// Scores all candidates of one window; returns the best penalty
// (-2 * log-likelihood). Candidates are abandoned as soon as their partial
// penalty exceeds the best so far; every candidate still consumes its draws.
template <ModelKind K>
WindowEstimate search_window(std::span<const double> dx, const ModelParams& p,
                             const MlConfig& cfg, Seed seed, Scratch& scratch) {
  using Kern = Kernel<K>;
  const std::size_t s = dx.size();
  scratch.noise.resize(s);
  scratch.vol.resize(s);
  scratch.latent.resize(s);
  scratch.best.resize(s);

  NormalStream rng(seed);
  WindowEstimate result;
  double best_penalty = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t tau = 0; tau < s; ++tau) {
      scratch.noise[tau] = rng.nonzero(kMinNoise);
      double v = std::abs(dx[tau] / scratch.noise[tau]);
      if (!(v >= cfg.vol_floor)) {
        v = cfg.vol_floor;
        ++result.floored_points;
      }
      scratch.vol[tau] = v;
    }

    double penalty = 0.0;
    bool abandoned = false;
    for (std::size_t tau = 0; tau < s; ++tau) {
      const double v = scratch.vol[tau];
      const double y = Kern::latent(p, v);
      scratch.latent[tau] = y;
      const double e1 = dx[tau] / v;
      penalty += e1 * e1;
      if (tau > 0) {
        const double y_prev = scratch.latent[tau - 1];
        const double h = Kern::diffusion(p, y_prev, scratch.vol[tau - 1]);
        const double e2 = (y - y_prev + Kern::drift(p, y_prev)) / h;
        penalty += e2 * e2;
      }
      if (penalty > best_penalty) {
        abandoned = true;
        break;
      }
    }
    if (abandoned || !std::isfinite(penalty)) continue;
    if (!have_best || penalty < best_penalty) {
      have_best = true;
      best_penalty = penalty;
      result.best_index = it;
      std::copy(scratch.latent.begin(), scratch.latent.end(), scratch.best.begin());
    }
  }

  if (!have_best) throw EstimationFailed("every candidate path was singular");
  result.path.assign(scratch.best.begin(), scratch.best.end());
  result.score = -0.5 * best_penalty;
  return result;
}

WindowEstimate dispatch_window(std::span<const double> dx, const ModelSpec& spec,
                               const MlConfig& cfg, Seed seed, Scratch& scratch) {
  switch (spec.kind) {
    case ModelKind::ExpOU:
      return search_window<ModelKind::ExpOU>(dx, spec.params, cfg, seed, scratch);
    case ModelKind::OU:
      return search_window<ModelKind::OU>(dx, spec.params, cfg, seed, scratch);
    case ModelKind::Heston:
      return search_window<ModelKind::Heston>(dx, spec.params, cfg, seed, scratch);
  }
  throw EstimationFailed("unknown model kind");
}

}  // namespace

double sigma_gbm(const ReturnSeries& returns) {
  if (returns.size() < 2) throw InsufficientData("sigma_gbm needs at least 2 returns");
  double sum_sq = 0.0;
  for (const double x : returns.dx) sum_sq += x * x;
  return std::sqrt(sum_sq / static_cast<double>(returns.size()));
}

VolSeries sigma_prop(const ReturnSeries& returns) {
  // <|dW1|> for dt = 1
  const double mean_abs_noise = std::sqrt(2.0 / std::numbers::pi);
  auto vol = vol_like(returns, "prop");
  for (std::size_t t = 0; t < returns.size(); ++t) {
    vol.sigma[t] = std::abs(returns.dx[t]) / mean_abs_noise;
  }
  return vol;
}

VolSeries sigma_decon(const ReturnSeries& returns, std::span<const double> noise) {
  if (noise.size() != returns.size()) {
    throw ValidationError("sigma_decon: noise and returns differ in length");
  }
  auto vol = vol_like(returns, "decon");
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (noise[t] == 0.0) throw DomainError("sigma_decon: zero noise draw");
    vol.sigma[t] = std::abs(returns.dx[t] / noise[t]);
  }
  return vol;
}

VolSeries sigma_decon(const ReturnSeries& returns, Seed seed) {
  NormalStream rng(seed);
  std::vector<double> noise(returns.size());
  for (auto& w : noise) w = rng.nonzero(kMinNoise);
  return sigma_decon(returns, noise);
}

void MlConfig::validate() const {
  if (window < 2) throw ValidationError("window must be >= 2");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (!(vol_floor > 0.0) || !std::isfinite(vol_floor)) {
    throw ValidationError("vol_floor must be > 0");
  }
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

void candidate_path(std::span<const double> dx, const ModelSpec& spec,
                    std::span<const double> noise, double vol_floor, std::span<double> out) {
  if (dx.size() != noise.size() || dx.size() != out.size()) {
    throw ValidationError("candidate_path: window lengths differ");
  }
  for (std::size_t tau = 0; tau < dx.size(); ++tau) {
    if (noise[tau] == 0.0) throw DomainError("candidate_path: zero noise draw");
    const double v = std::max(std::abs(dx[tau] / noise[tau]), vol_floor);
    out[tau] = eval_f_inv(spec, v);
  }
}

std::vector<double> candidate_path(std::span<const double> dx, const ModelSpec& spec,
                                   std::span<const double> noise, double vol_floor) {
  std::vector<double> out(dx.size());
  candidate_path(dx, spec, noise, vol_floor, out);
  return out;
}

double log_likelihood(std::span<const double> y, std::span<const double> dx,
                      const ModelSpec& spec, double dt) {
  if (y.size() != dx.size() && y.size() != dx.size() + 1) {
    throw ValidationError("log_likelihood: y must have dx.size() or dx.size() + 1 points");
  }
  double penalty = 0.0;
  for (std::size_t tau = 0; tau < dx.size(); ++tau) {
    const double f = eval_f(spec, y[tau]);
    if (f == 0.0) throw SingularLikelihood("f(Y) = 0 in likelihood");
    const double e1 = dx[tau] / f;
    penalty += e1 * e1 / dt;
  }
  for (std::size_t tau = 0; tau + 1 < y.size(); ++tau) {
    const double h = eval_h(spec, y[tau]);
    if (h == 0.0) throw SingularLikelihood("h(Y) = 0 in likelihood");
    const double e2 = (y[tau + 1] - y[tau] + eval_g(spec, y[tau]) * dt) / h;
    penalty += e2 * e2 / dt;
  }
  return -0.5 * penalty;
}

WindowEstimate estimate_window(std::span<const double> dx, const ModelSpec& spec,
                               const MlConfig& cfg, Seed seed) {
  cfg.validate();
  if (dx.size() != cfg.window) {
    throw ValidationError("estimate_window: window has " + std::to_string(dx.size()) +
                          " returns, expected " + std::to_string(cfg.window));
  }
  Scratch scratch;
  return dispatch_window(dx, spec, cfg, seed, scratch);
}

VolSeries estimate_series(const ReturnSeries& returns, const ModelSpec& spec, const MlConfig& cfg,
                          SeriesDiagnostics* diagnostics) {
  cfg.validate();
  spec.validate();
  const std::size_t n = returns.size();
  const std::size_t s = cfg.window;
  if (n < s) {
    throw InsufficientData("estimate_series needs at least " + std::to_string(s) +
                           " returns, got " + std::to_string(n));
  }

  auto vol = vol_like(returns, "ml");
  vol.spec = spec;
  vol.first_valid = s - 1;
  std::fill(vol.sigma.begin(), vol.sigma.begin() + static_cast<std::ptrdiff_t>(s - 1),
            VolSeries::absent);

  const std::size_t windows = n - s + 1;
  const std::size_t workers = std::min<std::size_t>(cfg.threads, windows);
  std::vector<std::size_t> floored(workers, 0);
  std::vector<std::exception_ptr> failures(workers);

  // Worker w handles windows w, w + workers, ... and writes only its own
  // slots, so the result does not depend on the worker count.
  const auto run = [&](std::size_t worker) {
    try {
      Scratch scratch;
      for (std::size_t i = worker; i < windows; i += workers) {
        const std::size_t t = s - 1 + i;
        const auto window = std::span<const double>(returns.dx).subspan(i, s);
        const auto best = dispatch_window(window, spec, cfg, derive_seed(cfg.seed, t), scratch);
        vol.sigma[t] = reported_vol(spec, best.path.back());
        floored[worker] += best.floored_points;
      }
    } catch (...) {
      failures[worker] = std::current_exception();
    }
  };

  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  if (diagnostics != nullptr) {
    diagnostics->windows = windows;
    diagnostics->candidate_points = windows * cfg.iterations * s;
    diagnostics->floored_points = 0;
    for (const auto f : floored) diagnostics->floored_points += f;
  }
  return vol;
}

ReturnSeries artificial_returns(const VolSeries& vol, Seed seed) {
  NormalStream rng(seed);
  ReturnSeries out;
  out.label = "artificial:" + vol.estimator;
  const auto present = vol.valid();
  out.dx.reserve(present.size());
  for (const double sigma : present) out.dx.push_back(sigma * rng());
  if (!vol.dates.empty()) {
    out.dates.assign(vol.dates.begin() + static_cast<std::ptrdiff_t>(vol.first_valid),
                     vol.dates.end());
  }
  return out;
}

}  // namespace volfilter
