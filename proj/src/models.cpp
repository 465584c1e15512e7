#include "volfilter/models.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace volfilter {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_positive(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("model config is missing '" + key + "'");
  double value = 0.0;
  const auto& text = it->second;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("model config '" + key + "' is not a number: " + text);
  }
  return value;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ExpOU:
      return "expou";
    case ModelKind::OU:
      return "ou";
    case ModelKind::Heston:
      return "heston";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  const auto n = lower(name);
  if (n == "expou") return ModelKind::ExpOU;
  if (n == "ou") return ModelKind::OU;
  if (n == "heston") return ModelKind::Heston;
  throw ValidationError("unknown model '" + std::string(name) + "' (expected expou|ou|heston)");
}

void ModelSpec::validate() const {
  const auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError(std::string(name) + " must be finite and > 0");
    }
  };
  check(params.k, "k");
  check(params.alpha, "alpha");
  check(params.m, "m");
}

double stationary_vol_mean(const ModelSpec& spec) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case ModelKind::ExpOU:
      return p.m * std::exp(p.k * p.k / (4.0 * p.alpha));
    case ModelKind::OU:
      return p.m;
    case ModelKind::Heston: {
      // E[sqrt(Y)] for Y ~ Gamma(nu, theta). lgamma keeps the ratio stable
      // for large nu.
      const double nu = spec.heston_shape();
      return std::sqrt(spec.latent_scale()) * std::exp(std::lgamma(nu + 0.5) - std::lgamma(nu));
    }
  }
  return 0.0;
}

double stationary_latent_density(const ModelSpec& spec, double y) {
  const double var = spec.latent_scale();
  switch (spec.kind) {
    case ModelKind::ExpOU:
    case ModelKind::OU: {
      const double d = y - spec.drift_fixed_point();
      return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    case ModelKind::Heston: {
      if (y < 0.0) return 0.0;
      const double nu = spec.heston_shape();
      if (y == 0.0) {
        if (nu < 1.0) return std::numeric_limits<double>::infinity();
        return nu == 1.0 ? 1.0 / var : 0.0;
      }
      const double log_density =
          (nu - 1.0) * std::log(y) - y / var - std::lgamma(nu) - nu * std::log(var);
      return std::exp(log_density);
    }
  }
  return 0.0;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    auto key = lower(trim(body.substr(0, eq)));
    auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    kv[std::move(key)] = std::move(value);
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_key_values(in);
}

ModelSpec spec_from_key_values(const KeyValues& kv) {
  const auto it = kv.find("model");
  if (it == kv.end()) throw ValidationError("model config is missing 'model'");
  ModelSpec spec;
  spec.kind = parse_model_kind(it->second);
  spec.params.k = parse_positive(kv, "k");
  spec.params.alpha = parse_positive(kv, "alpha");
  spec.params.m = parse_positive(kv, "m");
  spec.validate();
  return spec;
}

void write_spec(std::ostream& out, const ModelSpec& spec) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << "model = " << to_string(spec.kind) << '\n'
      << std::setprecision(17) << "k = " << spec.params.k << '\n'
      << "alpha = " << spec.params.alpha << '\n'
      << "m = " << spec.params.m << '\n';
  out.flags(flags);
  out.precision(prec);
}

std::optional<ModelSpec> preset(std::string_view name) {
  const auto n = lower(name);
  if (n == "dji-ou") return ModelSpec{ModelKind::OU, {1.4e-3, 5e-2, 1.2e-2}};
  if (n == "dji-heston") return ModelSpec{ModelKind::Heston, {2.45e-3, 4.5e-2, 8.62e-5}};
  if (n == "dji-expou") return ModelSpec{ModelKind::ExpOU, {4.7e-2, 1.82e-3, 8e-3}};
  return std::nullopt;
}

}  // namespace volfilter
