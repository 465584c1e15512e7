#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volfilter/models.hpp"

namespace volfilter {

/// Daily closes in date order. Dates are ISO-8601 strings.
struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> close;
  std::string label;

  std::size_t size() const noexcept { return close.size(); }
};

/// Zero-mean daily log-return increments dX(t).
struct ReturnSeries {
  std::vector<double> dx;
  std::string label;
  /// Either empty or one date per increment (the date the increment ends).
  std::vector<std::string> dates;

  std::size_t size() const noexcept { return dx.size(); }
};

/// Per-day volatility estimate aligned to a ReturnSeries. Entries before
/// `first_valid` are absent and hold NaN.
struct VolSeries {
  std::vector<double> sigma;
  std::size_t first_valid = 0;
  std::string estimator;  ///< gbm | prop | decon | ml
  std::optional<ModelSpec> spec;
  std::vector<std::string> dates;

  static constexpr double absent = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const noexcept { return sigma.size(); }
  bool present(std::size_t i) const noexcept { return i >= first_valid && i < sigma.size(); }
  std::span<const double> valid() const noexcept {
    return std::span<const double>(sigma).subspan(std::min(first_valid, sigma.size()));
  }
};

}  // namespace volfilter
