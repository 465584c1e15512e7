#include "volfilter/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

namespace volfilter {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool is_iso_date(std::string_view d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (const std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
  }
  const int month = (d[5] - '0') * 10 + (d[6] - '0');
  const int day = (d[8] - '0') * 10 + (d[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

void expect_type(const AnalysisTable& table, std::string_view type) {
  const auto found = series_type(table);
  if (found != type) {
    throw SchemaError("expected a '" + std::string(type) + "' series, found '" + found + "'");
  }
}

void expect_columns(const AnalysisTable& table, std::size_t n) {
  if (table.columns().size() != n) {
    throw SchemaError("expected " + std::to_string(n) + " columns, found " +
                      std::to_string(table.columns().size()));
  }
}

bool dated(const AnalysisTable& table) { return table.columns().front() == "date"; }

}  // namespace

PriceSeries parse_prices(std::istream& in, std::string label) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t date_col = 0;
  std::size_t close_col = 0;
  bool have_header = false;

  struct Row {
    std::string date;
    double close;
    std::size_t line;
  };
  std::vector<Row> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!have_header) {
      bool found_date = false;
      bool found_close = false;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto name = lower(cells[i]);
        if (name == "date") {
          date_col = i;
          found_date = true;
        } else if (name == "close") {
          close_col = i;
          found_close = true;
        }
      }
      if (!found_date || !found_close) {
        throw ParseError(line_no, "header must name 'date' and 'close' columns");
      }
      have_header = true;
      continue;
    }
    if (cells.size() <= std::max(date_col, close_col)) {
      throw ParseError(line_no, "row has " + std::to_string(cells.size()) + " fields");
    }
    const auto& date = cells[date_col];
    if (!is_iso_date(date)) throw ParseError(line_no, "date '" + date + "' is not YYYY-MM-DD");
    double close = 0.0;
    try {
      close = parse_number(cells[close_col]);
    } catch (const ValidationError&) {
      throw ParseError(line_no, "close '" + cells[close_col] + "' is not a number");
    }
    if (!std::isfinite(close) || close <= 0.0) {
      throw ValidationError("line " + std::to_string(line_no) + ": close price must be > 0, got '" +
                            cells[close_col] + "'");
    }
    rows.push_back({date, close, line_no});
  }
  if (!have_header) throw ParseError(line_no, "missing header row");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  PriceSeries prices;
  prices.label = std::move(label);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].date == rows[i - 1].date) {
      throw ValidationError("line " + std::to_string(rows[i].line) + ": duplicate date " +
                            rows[i].date);
    }
    prices.dates.push_back(rows[i].date);
    prices.close.push_back(rows[i].close);
  }
  return prices;
}

PriceSeries load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open price file " + path);
  return parse_prices(in, path);
}

ReturnSeries to_returns(const PriceSeries& prices) {
  if (prices.size() < 3) {
    throw InsufficientData("to_returns needs at least 3 prices, got " +
                           std::to_string(prices.size()));
  }
  ReturnSeries out;
  out.label = prices.label;
  const std::size_t n = prices.size() - 1;
  out.dx.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.dx[t] = std::log(prices.close[t + 1] / prices.close[t]);
  // Two passes: the second removes the rounding residue of the first.
  for (int pass = 0; pass < 2; ++pass) {
    const double mu =
        std::accumulate(out.dx.begin(), out.dx.end(), 0.0) / static_cast<double>(n);
    for (auto& x : out.dx) x -= mu;
  }
  if (!prices.dates.empty()) out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  return out;
}

std::string series_type(const AnalysisTable& table) { return table.find_meta("type"); }

AnalysisTable series_table(const PriceSeries& prices) {
  AnalysisTable table({"date", "close"});
  table.meta("type", "prices").meta("label", prices.label);
  for (std::size_t i = 0; i < prices.size(); ++i) {
    table.add_row({prices.dates[i], format_number(prices.close[i])});
  }
  return table;
}

AnalysisTable series_table(const ReturnSeries& returns) {
  const bool with_dates = !returns.dates.empty();
  AnalysisTable table({with_dates ? "date" : "index", "dx"});
  table.meta("type", "returns").meta("label", returns.label);
  for (std::size_t i = 0; i < returns.size(); ++i) {
    table.add_row({with_dates ? returns.dates[i] : std::to_string(i),
                   format_number(returns.dx[i])});
  }
  return table;
}

AnalysisTable series_table(const VolSeries& vol) {
  const bool with_dates = !vol.dates.empty();
  AnalysisTable table({with_dates ? "date" : "index", "sigma", "estimator"});
  table.meta("type", "vol").meta("estimator", vol.estimator);
  if (vol.spec) {
    table.meta("model", std::string(to_string(vol.spec->kind)))
        .meta("k", vol.spec->params.k)
        .meta("alpha", vol.spec->params.alpha)
        .meta("m", vol.spec->params.m);
  }
  for (std::size_t i = 0; i < vol.size(); ++i) {
    table.add_row({with_dates ? vol.dates[i] : std::to_string(i),
                   vol.present(i) ? format_number(vol.sigma[i]) : "NA", vol.estimator});
  }
  return table;
}

AnalysisTable series_table(const SimPath& path) {
  AnalysisTable table({"step", "x", "y", "sigma"});
  const auto& c = path.config;
  table.meta("type", "path")
      .meta("model", std::string(to_string(c.spec.kind)))
      .meta("k", c.spec.params.k)
      .meta("alpha", c.spec.params.alpha)
      .meta("m", c.spec.params.m)
      .meta("n_steps", std::to_string(c.n_steps))
      .meta("dt", c.dt)
      .meta("seed", std::to_string(c.seed))
      .meta("y0", c.y0 ? format_number(*c.y0) : std::string("stationary-draw"));
  for (std::size_t i = 0; i < path.size(); ++i) {
    table.add_row({std::to_string(i), format_number(path.x[i]), format_number(path.y[i]),
                   format_number(path.sigma[i])});
  }
  return table;
}

PriceSeries prices_from_table(const AnalysisTable& table) {
  expect_type(table, "prices");
  expect_columns(table, 2);
  PriceSeries prices;
  prices.label = table.find_meta("label");
  for (const auto& row : table.rows()) {
    prices.dates.push_back(row[0]);
    prices.close.push_back(parse_number(row[1]));
  }
  return prices;
}

ReturnSeries returns_from_table(const AnalysisTable& table) {
  expect_type(table, "returns");
  expect_columns(table, 2);
  ReturnSeries returns;
  returns.label = table.find_meta("label");
  const bool with_dates = dated(table);
  for (const auto& row : table.rows()) {
    if (with_dates) returns.dates.push_back(row[0]);
    const double v = parse_number(row[1]);
    if (!std::isfinite(v)) throw SchemaError("returns must be finite");
    returns.dx.push_back(v);
  }
  return returns;
}

VolSeries vol_from_table(const AnalysisTable& table) {
  expect_type(table, "vol");
  expect_columns(table, 3);
  VolSeries vol;
  vol.estimator = table.find_meta("estimator");
  if (!table.find_meta("model").empty()) {
    KeyValues kv;
    for (const auto* key : {"model", "k", "alpha", "m"}) kv[key] = table.find_meta(key);
    vol.spec = spec_from_key_values(kv);
  }
  const bool with_dates = dated(table);
  bool seen_present = false;
  for (const auto& row : table.rows()) {
    if (with_dates) vol.dates.push_back(row[0]);
    const double v = parse_number(row[1]);
    if (std::isnan(v)) {
      if (seen_present) throw SchemaError("absent volatility after the first present entry");
      ++vol.first_valid;
    } else {
      seen_present = true;
    }
    vol.sigma.push_back(v);
  }
  return vol;
}

SimPath path_from_table(const AnalysisTable& table) {
  expect_type(table, "path");
  expect_columns(table, 4);
  SimPath path;
  KeyValues kv;
  for (const auto* key : {"model", "k", "alpha", "m"}) kv[key] = table.find_meta(key);
  path.config.spec = spec_from_key_values(kv);
  path.config.dt = parse_number(table.find_meta("dt"));
  path.config.seed = std::stoull(table.find_meta("seed"));
  const auto y0 = table.find_meta("y0");
  if (y0 != "stationary-draw") path.config.y0 = parse_number(y0);
  path.config.n_steps = table.size() == 0 ? 0 : table.size() - 1;
  for (const auto& row : table.rows()) {
    path.x.push_back(parse_number(row[1]));
    path.y.push_back(parse_number(row[2]));
    path.sigma.push_back(parse_number(row[3]));
  }
  if (!path.x.empty()) path.config.x0 = path.x.front();
  return path;
}

PriceSeries load_price_series(const std::string& path) {
  return prices_from_table(AnalysisTable::load(path));
}
ReturnSeries load_returns(const std::string& path) {
  return returns_from_table(AnalysisTable::load(path));
}
VolSeries load_vol(const std::string& path) { return vol_from_table(AnalysisTable::load(path)); }
SimPath load_path(const std::string& path) { return path_from_table(AnalysisTable::load(path)); }

}  // namespace volfilter
