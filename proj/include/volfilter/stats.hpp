#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "volfilter/series.hpp"
#include "volfilter/table.hpp"

namespace volfilter {

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

enum class BinScale { Linear, Log };

struct Histogram {
  BinScale scale = BinScale::Linear;
  std::vector<double> edges;      ///< bins + 1 edges, uniform in x or ln x
  std::vector<std::size_t> counts;
  std::vector<double> density;    ///< counts / (N * bin width), per unit x

  std::size_t bins() const noexcept { return counts.size(); }
  double center(std::size_t i) const;
};

/// Normalized histogram. The range defaults to [min, max] of the samples;
/// an explicit range must contain every sample.
Histogram pdf(std::span<const double> samples, std::size_t bins, BinScale scale,
              std::optional<std::pair<double, double>> range = std::nullopt);

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

/// C(tau) for tau = 0..max_lag over the present entries, biased (1/N)
/// normalization: C(0) = 1.
std::vector<double> autocorrelation(std::span<const double> sigma, std::size_t max_lag);
std::vector<double> autocorrelation(const VolSeries& sigma, std::size_t max_lag);

/// Decay rate of C(tau): least squares of ln C(tau) against tau for
/// tau in [1, max_lag] while C(tau) stays above `min_corr`.
double fit_exponential_decay(std::span<const double> acf, double min_corr = 0.05);

struct LeverageCurve {
  std::vector<int> lags;        ///< -max_lag .. max_lag
  std::vector<double> values;   ///< L(tau)
  std::vector<std::size_t> pairs;
};

/// L(tau) = <dX(t) sigma(t + tau)^2> / <sigma(t)^2>^2. dx[i] and sigma[i]
/// refer to the same day; absent sigma entries are skipped.
LeverageCurve leverage(std::span<const double> dx, std::span<const double> sigma,
                       std::size_t max_lag);
LeverageCurve leverage(const ReturnSeries& dx, const VolSeries& sigma, std::size_t max_lag);

// ---------------------------------------------------------------------------
// Mean first-passage time
// ---------------------------------------------------------------------------

struct MfptCurve {
  double sigma_s = 0.0;
  std::vector<double> thresholds;        ///< L
  std::vector<double> mfpt;              ///< days; NaN when flagged
  std::vector<std::size_t> crossings;    ///< starts with a crossing
  std::vector<std::size_t> censored;     ///< starts with no crossing before the end

  std::size_t size() const noexcept { return thresholds.size(); }
  bool flagged(std::size_t i) const noexcept { return crossings[i] == 0; }
};

/// Every t with |dX(t)| < lambda = L sigma_s is a start; its passage time is
/// t' - t for the first t' > t with |dX(t')| >= lambda.
MfptCurve mfpt(std::span<const double> abs_dx, double sigma_s, std::span<const double> thresholds);

/// `points` thresholds evenly spaced in ln L over [lo, hi].
std::vector<double> log_thresholds(double lo = 0.1, double hi = 10.0, std::size_t points = 30);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept. Needs >= 2 distinct x.
RegressionFit linear_fit(std::span<const double> x, std::span<const double> y);

enum class LRange { Below1, Above1 };

/// ln MFPT against ln L over L < 1 or L > 1, using points whose crossings
/// outnumber censored starts. Slope is the exponent beta.
RegressionFit power_law_fit(const MfptCurve& curve, LRange range);

// ---------------------------------------------------------------------------
// Predictive regressions
// ---------------------------------------------------------------------------

struct BinnedMedianCurve {
  std::vector<double> center;     ///< median ln sigma of the bin's points
  std::vector<double> lo_edge;
  std::vector<double> hi_edge;
  std::vector<double> median;     ///< median ln|dX|
  std::vector<double> q1;
  std::vector<double> q3;
  std::vector<std::size_t> count;

  std::size_t size() const noexcept { return center.size(); }
};

inline constexpr std::size_t kDefaultMinCount = 30;

/// Bins pairs (ln sigma, ln|dX|) uniformly in ln sigma, keeps bins with at
/// least `min_count` points and fits a line through (center, median).
std::pair<BinnedMedianCurve, RegressionFit> conditional_median_regression(
    std::span<const double> ln_sigma, std::span<const double> ln_abs_dx, std::size_t n_bins,
    std::size_t min_count = kDefaultMinCount);

/// Pairs (ln sigma(t), ln|dX(t + h)|) over days where sigma(t) > 0 is present
/// and dX(t + h) != 0.
std::pair<std::vector<double>, std::vector<double>> horizon_pairs(const ReturnSeries& dx,
                                                                  const VolSeries& sigma,
                                                                  std::size_t h);

struct GammaPoint {
  std::size_t h = 0;
  double gamma = 0.0;
  double slope_error = 0.0;
};

std::vector<GammaPoint> gamma_horizon_scan(const ReturnSeries& dx, const VolSeries& sigma,
                                           std::span<const std::size_t> horizons,
                                           std::size_t n_bins = 20,
                                           std::size_t min_count = kDefaultMinCount);

struct GammaLogFit {
  RegressionFit short_horizon;                ///< all points, or h < split_h
  std::optional<RegressionFit> long_horizon;  ///< h >= split_h
  std::optional<std::size_t> split_h;
};

/// gamma(h) = a ln h + b, optionally separately on h < split_h and h >= split_h.
GammaLogFit fit_gamma_loglinear(std::span<const GammaPoint> scan,
                                std::optional<std::size_t> split_h = std::nullopt);

/// Var(est) / Var(decon) over indices where both are present.
double variance_ratio(const VolSeries& est, const VolSeries& decon);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  ///< 1/N normalization
double pearson(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Tabular output
// ---------------------------------------------------------------------------

AnalysisTable to_table(const Histogram& hist);
AnalysisTable acf_table(std::span<const double> acf);
AnalysisTable to_table(const LeverageCurve& curve);
AnalysisTable to_table(const MfptCurve& curve);
AnalysisTable to_table(const BinnedMedianCurve& curve, const RegressionFit& fit);
AnalysisTable to_table(std::span<const GammaPoint> scan);
AnalysisTable to_table(const GammaLogFit& fit);

}  // namespace volfilter
