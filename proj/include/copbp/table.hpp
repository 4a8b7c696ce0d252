#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "copbp/margins.hpp"

namespace copbp {

struct CsvError : std::runtime_error {
  CsvError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what), line(line_number) {}
  std::size_t line;
};

struct NonNumericColumn : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Column-major numeric panel. Missing cells hold NaN and are flagged in
/// `missing()`. `row_ids()` remembers each row's position in the file it came
/// from, so subsets can be traced back.
class PanelTable {
 public:
  PanelTable() = default;
  PanelTable(std::vector<std::string> names, Eigen::MatrixXd values);

  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& missing() const { return missing_; }
  const std::vector<Eigen::Index>& row_ids() const { return row_ids_; }
  const std::set<std::string, std::less<>>& non_numeric() const { return non_numeric_; }

  bool has(std::string_view name) const;
  Eigen::Index index_of(std::string_view name) const;
  Eigen::VectorXd column(std::string_view name) const;
  Row row(Eigen::Index i) const;

  void add_column(std::string name, const Eigen::VectorXd& values);
  PanelTable subset(const std::vector<Eigen::Index>& rows) const;

  void mark_non_numeric(std::string name) { non_numeric_.insert(std::move(name)); }

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing_;
  std::vector<Eigen::Index> row_ids_;
  std::set<std::string, std::less<>> non_numeric_;
};

struct DeletionReport {
  Eigen::Index input_rows = 0;
  Eigen::Index retained_rows = 0;
  Eigen::Index deleted_rows = 0;
};

/// Drops every row with a missing value in any of `columns`. Throws
/// NonNumericColumn if one of them held text.
std::pair<PanelTable, DeletionReport> listwise_delete(const PanelTable& table,
                                                      const std::vector<std::string>& columns);

/// Comma-delimited, header row first. Empty fields and "NA" are missing.
PanelTable parse_csv(std::istream& in);
PanelTable load_csv(const std::filesystem::path& path);

void write_csv(const PanelTable& table, std::ostream& out);
void save_csv(const PanelTable& table, const std::filesystem::path& path);

/// Shortest round-trip decimal form; "NA" for NaN.
std::string format_number(double x);

/// Year-over-year difference of `column` within each group ordered by `time`.
/// The first observation of every group is missing.
Eigen::VectorXd lag_difference(const PanelTable& table, std::string_view column, std::string_view group,
                               std::string_view time);

/// Years since the last event (event column == 1) within each group, ordered
/// by `time`. Counting starts at 0 for a group's first row.
Eigen::VectorXd peace_years(const PanelTable& table, std::string_view event, std::string_view group,
                            std::string_view time);

}  // namespace copbp
