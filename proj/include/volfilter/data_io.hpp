#pragma once

#include <iosfwd>
#include <string>

#include "volfilter/series.hpp"
#include "volfilter/sim.hpp"
#include "volfilter/table.hpp"

namespace volfilter {

/// CSV with a header row naming at least `date` and `close` (case-insensitive;
/// other columns are ignored). Rows are returned sorted by date.
PriceSeries parse_prices(std::istream& in, std::string label = "prices");
PriceSeries load_prices(const std::string& path);

/// dX(t) = ln(S(t+1) / S(t)) minus the sample mean of those log-returns.
/// Trading days are consecutive regardless of calendar gaps.
ReturnSeries to_returns(const PriceSeries& prices);

// Series files are AnalysisTables with a `type` metadata entry:
//
//   prices   date, close
//   returns  index|date, dx
//   vol      index|date, sigma, estimator   (absent entries written as NA)
//   path     step, x, y, sigma
//
// Values use 17 significant digits, so load(save(x)) is exact.

AnalysisTable series_table(const PriceSeries& prices);
AnalysisTable series_table(const ReturnSeries& returns);
AnalysisTable series_table(const VolSeries& vol);
AnalysisTable series_table(const SimPath& path);

PriceSeries prices_from_table(const AnalysisTable& table);
ReturnSeries returns_from_table(const AnalysisTable& table);
VolSeries vol_from_table(const AnalysisTable& table);
SimPath path_from_table(const AnalysisTable& table);

template <typename Series>
void save_series(const std::string& path, const Series& series) {
  series_table(series).save(path);
}

PriceSeries load_price_series(const std::string& path);
ReturnSeries load_returns(const std::string& path);
VolSeries load_vol(const std::string& path);
SimPath load_path(const std::string& path);

/// Type tag of a saved series file ("returns", "vol", ...).
std::string series_type(const AnalysisTable& table);

}  // namespace volfilter
