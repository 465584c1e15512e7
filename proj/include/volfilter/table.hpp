#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace volfilter {

/// Decimal text with 17 significant digits; NaN is written as "NA".
std::string format_number(double value);
/// Inverse of format_number. Throws ValidationError on malformed text.
double parse_number(std::string_view text);

/// Tab-separated table with a '#'-prefixed metadata header:
///
///   # key=value
///   # ...
///   # col_a<TAB>col_b
///   1.5<TAB>2
class AnalysisTable {
 public:
  AnalysisTable() = default;
  explicit AnalysisTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  AnalysisTable& meta(std::string key, std::string value);
  AnalysisTable& meta(std::string key, double value);

  void add_row(std::vector<std::string> cells);
  void add_row(std::initializer_list<double> values);

  const std::vector<std::pair<std::string, std::string>>& metadata() const noexcept {
    return meta_;
  }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  /// Metadata value for `key`, or empty.
  std::string find_meta(std::string_view key) const;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  /// Reads a table written by write(). The last '#' line names the columns;
  /// every data row must have that many cells.
  static AnalysisTable read(std::istream& in);
  static AnalysisTable load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace volfilter
