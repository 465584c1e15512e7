#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "volfilter/models.hpp"
#include "volfilter/random.hpp"
#include "volfilter/series.hpp"

namespace volfilter {

/// Candidate noise draws with |dW1| below this are redrawn.
inline constexpr double kMinNoise = 1e-12;

// ---------------------------------------------------------------------------
// Baseline estimators
// ---------------------------------------------------------------------------

/// Constant-volatility estimate sqrt(<dX^2> / dt), dt = 1 day.
double sigma_gbm(const ReturnSeries& returns);

/// sigma(t) = |dX(t)| / <|dW1|>, with <|dW1|> = sqrt(2/pi).
VolSeries sigma_prop(const ReturnSeries& returns);

/// sigma(t) = |dX(t) / dW1(t)| with one fresh standard normal per day.
VolSeries sigma_decon(const ReturnSeries& returns, Seed seed);

/// Same as above with caller-supplied noise (noise.size() == returns.size()).
VolSeries sigma_decon(const ReturnSeries& returns, std::span<const double> noise);

// ---------------------------------------------------------------------------
// Maximum-likelihood filter
// ---------------------------------------------------------------------------

struct MlConfig {
  std::size_t window = 10;         ///< s, days per window
  std::size_t iterations = 100000; ///< I, candidates per window
  Seed seed = 0;
  double vol_floor = 1e-6;         ///< lower bound on |dX / dW1| per day
  unsigned threads = 1;            ///< window-level parallelism; output is invariant to it

  void validate() const;
};

/// Ybar(tau) = f^-1(max(|dX(tau) / dW1(tau)|, vol_floor)). Writes into `out`.
void candidate_path(std::span<const double> dx, const ModelSpec& spec,
                    std::span<const double> noise, double vol_floor, std::span<double> out);
std::vector<double> candidate_path(std::span<const double> dx, const ModelSpec& spec,
                                   std::span<const double> noise, double vol_floor);

/// Truncated path log-probability (dt = 1 by default)
///
///   -1/2 sum_tau (dX(tau) / f(Y(tau)))^2 / dt
///   -1/2 sum_tau (dY(tau) + g(Y(tau)) dt)^2 / (h(Y(tau))^2 dt)
///
/// with dY(tau) = Y(tau+1) - Y(tau). Normalization, Jacobian and initial
/// condition terms are dropped. `y` holds either dx.size() + 1 points (one
/// latent transition per return) or dx.size() points (the filter's windows:
/// every return is scored, with one transition fewer). Throws
/// SingularLikelihood where f(Y) or h(Y) vanishes.
double log_likelihood(std::span<const double> y, std::span<const double> dx,
                      const ModelSpec& spec, double dt = 1.0);

struct WindowEstimate {
  std::vector<double> path;  ///< best candidate Ybar, one point per return
  double score = 0.0;
  std::size_t best_index = 0;     ///< 0-based candidate index of the argmax
  std::size_t floored_points = 0; ///< over all candidates in the window
};

/// Draws cfg.iterations candidate windows and keeps the highest-scoring one
/// (first occurrence on ties). Candidate i consumes dx.size() consecutive
/// `NormalStream(seed).nonzero(kMinNoise)` draws, so the search can be
/// replayed exactly from the seed.
WindowEstimate estimate_window(std::span<const double> dx, const ModelSpec& spec,
                               const MlConfig& cfg, Seed seed);

struct SeriesDiagnostics {
  std::size_t windows = 0;
  std::size_t candidate_points = 0;
  std::size_t floored_points = 0;

  double floored_fraction() const noexcept {
    return candidate_points == 0 ? 0.0
                                 : static_cast<double>(floored_points) /
                                       static_cast<double>(candidate_points);
  }
};

/// Causal filter: sigma_est(t) = |f(Y_est)| at the end of the window
/// [t - s + 1, t], window seed derive_seed(cfg.seed, t). The first s - 1
/// entries are absent.
VolSeries estimate_series(const ReturnSeries& returns, const ModelSpec& spec, const MlConfig& cfg,
                          SeriesDiagnostics* diagnostics = nullptr);

/// dX_art(t) = sigma(t) eps(t) over the present entries of `vol`.
ReturnSeries artificial_returns(const VolSeries& vol, Seed seed);

}  // namespace volfilter
