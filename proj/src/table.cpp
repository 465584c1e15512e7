#include "volfilter/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "volfilter/errors.hpp"

namespace volfilter {

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cells;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_number(std::string_view text) {
  if (text == "NA") return std::nan("");
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

AnalysisTable& AnalysisTable::meta(std::string key, std::string value) {
  meta_.emplace_back(std::move(key), std::move(value));
  return *this;
}

AnalysisTable& AnalysisTable::meta(std::string key, double value) {
  return meta(std::move(key), format_number(value));
}

void AnalysisTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw SchemaError("row has " + std::to_string(cells.size()) + " cells, table has " +
                      std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(cells));
}

void AnalysisTable::add_row(std::initializer_list<double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (const double v : values) cells.push_back(format_number(v));
  add_row(std::move(cells));
}

std::string AnalysisTable::find_meta(std::string_view key) const {
  for (const auto& [k, v] : meta_) {
    if (k == key) return v;
  }
  return {};
}

void AnalysisTable::write(std::ostream& out) const {
  for (const auto& [k, v] : meta_) out << "# " << k << '=' << v << '\n';
  out << "# ";
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "\t" : "") << columns_[i];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << '\n';
  }
}

void AnalysisTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write(out);
  if (!out) throw IoError("write failed: " + path);
}

AnalysisTable AnalysisTable::read(std::istream& in) {
  AnalysisTable table;
  std::vector<std::string> header_lines;
  std::string line;
  std::size_t line_no = 0;
  bool in_body = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (in_body) throw ParseError(line_no, "metadata after data rows");
      header_lines.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    if (!in_body) {
      if (header_lines.empty()) throw SchemaError("missing column header line");
      table.columns_ = split_tabs(header_lines.back());
      header_lines.pop_back();
      for (const auto& h : header_lines) {
        const auto eq = h.find('=');
        if (eq == std::string::npos) {
          table.meta_.emplace_back(h, "");
        } else {
          table.meta_.emplace_back(h.substr(0, eq), h.substr(eq + 1));
        }
      }
      in_body = true;
    }
    auto cells = split_tabs(line);
    if (cells.size() != table.columns_.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.columns_.size()) + " columns, found " +
                        std::to_string(cells.size()));
    }
    table.rows_.push_back(std::move(cells));
  }
  if (!in_body) {
    // Header only: an empty but valid table.
    if (!header_lines.empty()) {
      table.columns_ = split_tabs(header_lines.back());
      header_lines.pop_back();
      for (const auto& h : header_lines) {
        const auto eq = h.find('=');
        table.meta_.emplace_back(h.substr(0, eq),
                                 eq == std::string::npos ? "" : h.substr(eq + 1));
      }
    }
  }
  return table;
}

AnalysisTable AnalysisTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read(in);
}

}  // namespace volfilter
