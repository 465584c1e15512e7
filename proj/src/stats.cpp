#include "volfilter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace volfilter {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Type-7 (linear interpolation) quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double sorted_median(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

// ---------------------------------------------------------------------------

double Histogram::center(std::size_t i) const {
  return scale == BinScale::Log ? std::sqrt(edges[i] * edges[i + 1])
                                : 0.5 * (edges[i] + edges[i + 1]);
}

Histogram pdf(std::span<const double> samples, std::size_t bins, BinScale scale,
              std::optional<std::pair<double, double>> range) {
  if (samples.empty()) throw InsufficientData("pdf of an empty sample");
  if (bins == 0) throw ValidationError("pdf needs at least one bin");
  for (const double x : samples) {
    if (!std::isfinite(x)) throw ValidationError("pdf sample is not finite");
    if (scale == BinScale::Log && !(x > 0.0)) {
      throw DomainError("log-scale pdf requires positive samples");
    }
  }
  const auto map = [scale](double x) { return scale == BinScale::Log ? std::log(x) : x; };
  const auto unmap = [scale](double u) { return scale == BinScale::Log ? std::exp(u) : u; };

  double lo = 0.0;
  double hi = 0.0;
  if (range) {
    if (!(range->first < range->second)) throw ValidationError("pdf range is empty");
    if (scale == BinScale::Log && !(range->first > 0.0)) {
      throw DomainError("log-scale pdf range must be positive");
    }
    lo = map(range->first);
    hi = map(range->second);
  } else {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = map(*mn);
    hi = map(*mx);
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }

  Histogram hist;
  hist.scale = scale;
  hist.edges.resize(bins + 1);
  const double du = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) hist.edges[i] = unmap(lo + du * static_cast<double>(i));
  hist.edges.front() = unmap(lo);
  hist.edges.back() = unmap(hi);

  hist.counts.assign(bins, 0);
  for (const double x : samples) {
    const double u = map(x);
    if (u < lo || u > hi) throw ValidationError("pdf sample outside the requested range");
    auto idx = static_cast<std::size_t>(std::floor((u - lo) / du));
    idx = std::min(idx, bins - 1);
    ++hist.counts[idx];
  }
  const double n = static_cast<double>(samples.size());
  hist.density.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    hist.density[i] = static_cast<double>(hist.counts[i]) / (n * (hist.edges[i + 1] - hist.edges[i]));
  }
  return hist;
}

// ---------------------------------------------------------------------------

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientData("mean of an empty series");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double mu = mean(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - mu) * (v - mu);
  return ss / static_cast<double>(x.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> autocorrelation(std::span<const double> sigma, std::size_t max_lag) {
  const std::size_t n = sigma.size();
  if (n <= max_lag) {
    throw InsufficientData("autocorrelation: series length " + std::to_string(n) +
                           " must exceed max_lag " + std::to_string(max_lag));
  }
  const double mu = mean(sigma);
  std::vector<double> dev(n);
  for (std::size_t t = 0; t < n; ++t) dev[t] = sigma[t] - mu;

  std::vector<double> acf(max_lag + 1);
  double c0 = 0.0;
  for (const double d : dev) c0 += d * d;
  if (c0 == 0.0) throw DegenerateInput("autocorrelation: zero-variance series");
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) c += dev[t + lag] * dev[t];
    acf[lag] = c / c0;
  }
  return acf;
}

std::vector<double> autocorrelation(const VolSeries& sigma, std::size_t max_lag) {
  return autocorrelation(sigma.valid(), max_lag);
}

double fit_exponential_decay(std::span<const double> acf, double min_corr) {
  std::vector<double> lags;
  std::vector<double> logs;
  for (std::size_t lag = 1; lag < acf.size() && acf[lag] > min_corr; ++lag) {
    lags.push_back(static_cast<double>(lag));
    logs.push_back(std::log(acf[lag]));
  }
  return -linear_fit(lags, logs).slope;
}

LeverageCurve leverage(std::span<const double> dx, std::span<const double> sigma,
                       std::size_t max_lag) {
  if (dx.size() != sigma.size()) throw ValidationError("leverage: series are not aligned");
  const std::size_t n = dx.size();
  std::vector<double> sq(n, kNaN);
  double sum_sq = 0.0;
  std::size_t present = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (std::isfinite(sigma[t])) {
      sq[t] = sigma[t] * sigma[t];
      sum_sq += sq[t];
      ++present;
    }
  }
  if (present == 0 || sum_sq == 0.0) throw DegenerateInput("leverage: <sigma^2> is zero");
  const double mean_sq = sum_sq / static_cast<double>(present);
  const double norm = mean_sq * mean_sq;

  const auto lag_max = static_cast<long long>(max_lag);
  const auto len = static_cast<long long>(n);
  LeverageCurve curve;
  for (long long lag = -lag_max; lag <= lag_max; ++lag) {
    double acc = 0.0;
    std::size_t pairs = 0;
    const long long t_lo = std::max(0LL, -lag);
    const long long t_hi = std::min(len, len - lag);
    for (long long t = t_lo; t < t_hi; ++t) {
      const double s2 = sq[static_cast<std::size_t>(t + lag)];
      if (std::isnan(s2)) continue;
      acc += dx[static_cast<std::size_t>(t)] * s2;
      ++pairs;
    }
    curve.lags.push_back(static_cast<int>(lag));
    curve.values.push_back(pairs == 0 ? kNaN : acc / static_cast<double>(pairs) / norm);
    curve.pairs.push_back(pairs);
  }
  return curve;
}

LeverageCurve leverage(const ReturnSeries& dx, const VolSeries& sigma, std::size_t max_lag) {
  return leverage(dx.dx, sigma.sigma, max_lag);
}

// ---------------------------------------------------------------------------

MfptCurve mfpt(std::span<const double> abs_dx, double sigma_s,
               std::span<const double> thresholds) {
  if (!(sigma_s > 0.0) || !std::isfinite(sigma_s)) throw ValidationError("mfpt: sigma_s must be > 0");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw ValidationError("mfpt: thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw ValidationError("mfpt: thresholds must be strictly ascending");
    }
  }
  const std::size_t n = abs_dx.size();
  MfptCurve curve;
  curve.sigma_s = sigma_s;
  for (const double level : thresholds) {
    const double lambda = level * sigma_s;
    std::size_t next = n;  // first index > t with |dX| >= lambda
    std::size_t total = 0;
    std::size_t crossings = 0;
    std::size_t censored = 0;
    for (std::size_t t = n; t-- > 0;) {
      if (abs_dx[t] < lambda) {
        if (next < n) {
          total += next - t;
          ++crossings;
        } else {
          ++censored;
        }
      } else {
        next = t;
      }
    }
    curve.thresholds.push_back(level);
    curve.mfpt.push_back(crossings == 0 ? kNaN
                                        : static_cast<double>(total) /
                                              static_cast<double>(crossings));
    curve.crossings.push_back(crossings);
    curve.censored.push_back(censored);
  }
  return curve;
}

std::vector<double> log_thresholds(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw ValidationError("log_thresholds needs 0 < lo < hi and at least 2 points");
  }
  std::vector<double> out(points);
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

RegressionFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("linear_fit: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("linear_fit needs at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientData("linear_fit needs at least 2 distinct x values");
  RegressionFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      sse += r * r;
    }
    fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

RegressionFit power_law_fit(const MfptCurve& curve, LRange range) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double level = curve.thresholds[i];
    const bool in_range = range == LRange::Below1 ? level < 1.0 : level > 1.0;
    if (!in_range || curve.flagged(i) || curve.crossings[i] <= curve.censored[i]) continue;
    if (!(curve.mfpt[i] > 0.0)) continue;
    x.push_back(std::log(level));
    y.push_back(std::log(curve.mfpt[i]));
  }
  if (x.size() < 2) {
    throw InsufficientData(std::string("power_law_fit: fewer than 2 usable points with L ") +
                           (range == LRange::Below1 ? "< 1" : "> 1"));
  }
  return linear_fit(x, y);
}

// ---------------------------------------------------------------------------

std::pair<BinnedMedianCurve, RegressionFit> conditional_median_regression(
    std::span<const double> ln_sigma, std::span<const double> ln_abs_dx, std::size_t n_bins,
    std::size_t min_count) {
  if (ln_sigma.size() != ln_abs_dx.size()) {
    throw ValidationError("conditional_median_regression: length mismatch");
  }
  if (ln_sigma.empty()) throw InsufficientData("conditional_median_regression: no points");
  if (n_bins < 2) throw ValidationError("conditional_median_regression needs >= 2 bins");
  const auto [mn, mx] = std::minmax_element(ln_sigma.begin(), ln_sigma.end());
  const double lo = *mn;
  const double hi = *mx;
  if (!(hi > lo)) throw InsufficientData("conditional_median_regression: all points in one bin");
  const double width = (hi - lo) / static_cast<double>(n_bins);

  std::vector<std::vector<double>> xs(n_bins);
  std::vector<std::vector<double>> ys(n_bins);
  for (std::size_t i = 0; i < ln_sigma.size(); ++i) {
    auto idx = static_cast<std::size_t>(std::floor((ln_sigma[i] - lo) / width));
    idx = std::min(idx, n_bins - 1);
    xs[idx].push_back(ln_sigma[i]);
    ys[idx].push_back(ln_abs_dx[i]);
  }

  BinnedMedianCurve curve;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (ys[b].size() < std::max<std::size_t>(min_count, 1)) continue;
    std::sort(xs[b].begin(), xs[b].end());
    std::sort(ys[b].begin(), ys[b].end());
    curve.center.push_back(sorted_median(xs[b]));
    curve.lo_edge.push_back(lo + width * static_cast<double>(b));
    curve.hi_edge.push_back(b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1));
    curve.median.push_back(sorted_median(ys[b]));
    curve.q1.push_back(sorted_quantile(ys[b], 0.25));
    curve.q3.push_back(sorted_quantile(ys[b], 0.75));
    curve.count.push_back(ys[b].size());
  }
  if (curve.size() < 2) {
    throw InsufficientData("conditional_median_regression: fewer than 2 bins with " +
                           std::to_string(min_count) + " points");
  }
  auto fit = linear_fit(curve.center, curve.median);
  return {std::move(curve), fit};
}

std::pair<std::vector<double>, std::vector<double>> horizon_pairs(const ReturnSeries& dx,
                                                                  const VolSeries& sigma,
                                                                  std::size_t h) {
  if (dx.size() != sigma.size()) throw ValidationError("returns and volatility are not aligned");
  if (h < 1 || h >= dx.size()) {
    throw ValidationError("horizon " + std::to_string(h) + " outside [1, series length)");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t t = sigma.first_valid; t + h < dx.size(); ++t) {
    const double s = sigma.sigma[t];
    const double r = dx.dx[t + h];
    if (!(s > 0.0) || !std::isfinite(s) || r == 0.0) continue;
    x.push_back(std::log(s));
    y.push_back(std::log(std::abs(r)));
  }
  return {std::move(x), std::move(y)};
}

std::vector<GammaPoint> gamma_horizon_scan(const ReturnSeries& dx, const VolSeries& sigma,
                                           std::span<const std::size_t> horizons,
                                           std::size_t n_bins, std::size_t min_count) {
  std::vector<GammaPoint> scan;
  scan.reserve(horizons.size());
  for (const std::size_t h : horizons) {
    const auto [x, y] = horizon_pairs(dx, sigma, h);
    const auto fit = conditional_median_regression(x, y, n_bins, min_count).second;
    scan.push_back({h, fit.slope, fit.slope_stderr});
  }
  return scan;
}

GammaLogFit fit_gamma_loglinear(std::span<const GammaPoint> scan,
                                std::optional<std::size_t> split_h) {
  const auto fit_segment = [](std::span<const GammaPoint> points, const char* name) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& p : points) {
      if (p.h < 1) throw ValidationError("gamma scan horizons must be >= 1");
      x.push_back(std::log(static_cast<double>(p.h)));
      y.push_back(p.gamma);
    }
    if (x.size() < 2) {
      throw InsufficientData(std::string("fit_gamma_loglinear: ") + name +
                             " segment has fewer than 2 points");
    }
    return linear_fit(x, y);
  };

  GammaLogFit out;
  out.split_h = split_h;
  if (!split_h) {
    out.short_horizon = fit_segment(scan, "single");
    return out;
  }
  std::vector<GammaPoint> below;
  std::vector<GammaPoint> above;
  for (const auto& p : scan) (p.h < *split_h ? below : above).push_back(p);
  out.short_horizon = fit_segment(below, "short-horizon (h < split)");
  out.long_horizon = fit_segment(above, "long-horizon (h >= split)");
  return out;
}

double variance_ratio(const VolSeries& est, const VolSeries& decon) {
  if (est.size() != decon.size()) {
    throw ValidationError("variance_ratio: series are not aligned to the same returns");
  }
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t t = std::max(est.first_valid, decon.first_valid); t < est.size(); ++t) {
    if (!std::isfinite(est.sigma[t]) || !std::isfinite(decon.sigma[t])) continue;
    a.push_back(est.sigma[t]);
    b.push_back(decon.sigma[t]);
  }
  if (a.size() < 2) throw InsufficientData("variance_ratio: fewer than 2 common points");
  const double denom = variance(b);
  if (denom == 0.0) throw DegenerateInput("variance_ratio: Var(decon) is zero");
  return variance(a) / denom;
}

// ---------------------------------------------------------------------------

AnalysisTable to_table(const Histogram& hist) {
  AnalysisTable table({"bin_lo", "bin_hi", "center", "count", "density"});
  std::size_t total = 0;
  for (const auto c : hist.counts) total += c;
  table.meta("operation", "pdf")
      .meta("scale", hist.scale == BinScale::Log ? "log" : "linear")
      .meta("bins", std::to_string(hist.bins()))
      .meta("samples", std::to_string(total));
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    table.add_row({hist.edges[i], hist.edges[i + 1], hist.center(i),
                   static_cast<double>(hist.counts[i]), hist.density[i]});
  }
  return table;
}

AnalysisTable acf_table(std::span<const double> acf) {
  AnalysisTable table({"tau", "C"});
  table.meta("operation", "acf")
      .meta("max_lag", std::to_string(acf.empty() ? 0 : acf.size() - 1))
      .meta("normalization", "biased");
  for (std::size_t lag = 0; lag < acf.size(); ++lag) {
    table.add_row({static_cast<double>(lag), acf[lag]});
  }
  return table;
}

AnalysisTable to_table(const LeverageCurve& curve) {
  AnalysisTable table({"tau", "L", "pairs"});
  table.meta("operation", "leverage")
      .meta("definition", "<dX(t) sigma(t+tau)^2> / <sigma^2>^2");
  for (std::size_t i = 0; i < curve.lags.size(); ++i) {
    table.add_row({static_cast<double>(curve.lags[i]), curve.values[i],
                   static_cast<double>(curve.pairs[i])});
  }
  return table;
}

AnalysisTable to_table(const MfptCurve& curve) {
  AnalysisTable table({"L", "lambda", "mfpt", "crossings", "censored", "flagged"});
  table.meta("operation", "mfpt")
      .meta("sigma_s", curve.sigma_s)
      .meta("start_set", "all-below-threshold")
      .meta("censoring", "excluded-from-mean");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    table.add_row({curve.thresholds[i], curve.thresholds[i] * curve.sigma_s, curve.mfpt[i],
                   static_cast<double>(curve.crossings[i]), static_cast<double>(curve.censored[i]),
                   curve.flagged(i) ? 1.0 : 0.0});
  }
  return table;
}

AnalysisTable to_table(const BinnedMedianCurve& curve, const RegressionFit& fit) {
  AnalysisTable table({"center", "lo_edge", "hi_edge", "median", "q1", "q3", "count"});
  table.meta("operation", "conditional_median_regression")
      .meta("slope", fit.slope)
      .meta("intercept", fit.intercept)
      .meta("slope_stderr", fit.slope_stderr);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    table.add_row({curve.center[i], curve.lo_edge[i], curve.hi_edge[i], curve.median[i],
                   curve.q1[i], curve.q3[i], static_cast<double>(curve.count[i])});
  }
  return table;
}

AnalysisTable to_table(std::span<const GammaPoint> scan) {
  AnalysisTable table({"h", "gamma", "slope_error"});
  table.meta("operation", "gamma_horizon_scan");
  for (const auto& p : scan) table.add_row({static_cast<double>(p.h), p.gamma, p.slope_error});
  return table;
}

AnalysisTable to_table(const GammaLogFit& fit) {
  AnalysisTable table({"segment", "a", "b", "a_stderr", "points"});
  table.meta("operation", "fit_gamma_loglinear")
      .meta("model", "gamma(h) = a ln h + b")
      .meta("split_h", fit.split_h ? std::to_string(*fit.split_h) : std::string("none"));
  const auto row = [&table](const std::string& name, const RegressionFit& f) {
    table.add_row({name, format_number(f.slope), format_number(f.intercept),
                   format_number(f.slope_stderr), std::to_string(f.points)});
  };
  row(fit.split_h ? "short" : "all", fit.short_horizon);
  if (fit.long_horizon) row("long", *fit.long_horizon);
  return table;
}

}  // namespace volfilter
