#pragma once

// Stochastic volatility models of the form
//
//   dX = f(Y) dW1
//   dY = -g(Y) dt + h(Y) dW2
//
// with sigma = f(Y). Three (f, g, h) triples are supported:
//
//            f(y)        g(y)          h(y)
//   expOU    m*exp(y)    alpha*y       k
//   OU       y           alpha*(y-m)   k
//   Heston   sqrt(y)     alpha*(y-m)   k*sqrt(y)
//
// All quantities are in daily units. For Heston, m is a variance level.

#include <cmath>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "volfilter/errors.hpp"

namespace volfilter {

enum class ModelKind { ExpOU, OU, Heston };

std::string_view to_string(ModelKind kind);
/// Accepts "expou", "ou", "heston" (case-insensitive).
ModelKind parse_model_kind(std::string_view name);

struct ModelParams {
  double k = 0.0;      ///< volatility of volatility
  double alpha = 0.0;  ///< reversion rate, 1/day
  double m = 0.0;      ///< normal level
};

struct ModelSpec {
  ModelKind kind = ModelKind::OU;
  ModelParams params;

  /// Throws ValidationError unless k, alpha, m are all finite and positive.
  void validate() const;

  /// Latent fixed point of the drift: 0 for expOU, m otherwise.
  double drift_fixed_point() const noexcept { return kind == ModelKind::ExpOU ? 0.0 : params.m; }

  /// Stationary variance of Y for the Gaussian models, Gamma scale for Heston.
  double latent_scale() const noexcept {
    return params.k * params.k / (2.0 * params.alpha);
  }

  /// Stationary Gamma shape of the Heston latent variable, 2*alpha*m/k^2.
  double heston_shape() const noexcept {
    return 2.0 * params.alpha * params.m / (params.k * params.k);
  }
};

// The four model functions are defined inline: they sit in the estimator's
// inner loop.

inline double eval_f(const ModelSpec& spec, double y) {
  switch (spec.kind) {
    case ModelKind::ExpOU:
      return spec.params.m * std::exp(y);
    case ModelKind::OU:
      return y;
    case ModelKind::Heston:
      if (y < 0.0) throw DomainError("heston f(y) requires y >= 0");
      return std::sqrt(y);
  }
  return 0.0;
}

inline double eval_f_inv(const ModelSpec& spec, double v) {
  switch (spec.kind) {
    case ModelKind::ExpOU:
      if (!(v > 0.0)) throw DomainError("expou f^-1(v) requires v > 0");
      return std::log(v / spec.params.m);
    case ModelKind::OU:
      if (v < 0.0) throw DomainError("ou f^-1(v) requires v >= 0");
      return v;
    case ModelKind::Heston:
      if (v < 0.0) throw DomainError("heston f^-1(v) requires v >= 0");
      return v * v;
  }
  return 0.0;
}

inline double eval_g(const ModelSpec& spec, double y) noexcept {
  return spec.kind == ModelKind::ExpOU ? spec.params.alpha * y
                                       : spec.params.alpha * (y - spec.params.m);
}

inline double eval_h(const ModelSpec& spec, double y) {
  if (spec.kind != ModelKind::Heston) return spec.params.k;
  if (y < 0.0) throw DomainError("heston h(y) requires y >= 0");
  return spec.params.k * std::sqrt(y);
}

/// Volatility reported to users: |f(Y)|. Differs from f only for OU.
inline double reported_vol(const ModelSpec& spec, double y) {
  return std::abs(eval_f(spec, y));
}

/// Expected stationary volatility sigma_s, used to form L = lambda / sigma_s.
///   expOU:  m * exp(k^2 / 4 alpha)
///   OU:     m
///   Heston: sqrt(k^2 / 2 alpha) * Gamma(nu + 1/2) / Gamma(nu),  nu = 2 alpha m / k^2
double stationary_vol_mean(const ModelSpec& spec);

/// Stationary density of the latent variable Y. Gaussian for expOU (mean 0)
/// and OU (mean m), both with variance k^2/2alpha; Gamma(nu, k^2/2alpha) for
/// Heston, zero for y < 0.
double stationary_latent_density(const ModelSpec& spec, double y);

// Flat key-value configs:
//
//   model = heston
//   k = 2.45e-3
//   alpha = 4.5e-2
//   m = 8.62e-5
//
// '#' starts a comment. Unknown keys are kept so callers can read extra
// settings from the same file.

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::string& path);

/// Builds a spec from "model", "k", "alpha", "m". Missing keys are an error.
ModelSpec spec_from_key_values(const KeyValues& kv);
void write_spec(std::ostream& out, const ModelSpec& spec);

/// Daily Dow Jones calibrations: "dji-expou", "dji-ou", "dji-heston".
std::optional<ModelSpec> preset(std::string_view name);

}  // namespace volfilter
