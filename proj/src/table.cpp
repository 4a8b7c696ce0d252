#include "copbp/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace copbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

PanelTable::PanelTable(std::vector<std::string> names, Eigen::MatrixXd values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
    throw std::invalid_argument("PanelTable: name count does not match column count");
  missing_ = values_.array().isNaN();
  row_ids_.resize(static_cast<std::size_t>(values_.rows()));
  std::iota(row_ids_.begin(), row_ids_.end(), Eigen::Index{0});
}

bool PanelTable::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Eigen::Index PanelTable::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw MissingColumn("column '" + std::string(name) + "' not found");
  return it - names_.begin();
}

Eigen::VectorXd PanelTable::column(std::string_view name) const { return values_.col(index_of(name)); }

Row PanelTable::row(Eigen::Index i) const {
  Row r;
  for (Eigen::Index j = 0; j < cols(); ++j) r.emplace(names_[static_cast<std::size_t>(j)], values_(i, j));
  return r;
}

void PanelTable::add_column(std::string name, const Eigen::VectorXd& values) {
  if (values.size() != rows() && cols() > 0) throw std::invalid_argument("add_column: length mismatch");
  if (has(name)) {
    const Eigen::Index j = index_of(name);
    values_.col(j) = values;
    missing_.col(j) = values.array().isNaN();
    non_numeric_.erase(name);
    return;
  }
  if (cols() == 0) {
    row_ids_.resize(static_cast<std::size_t>(values.size()));
    std::iota(row_ids_.begin(), row_ids_.end(), Eigen::Index{0});
    values_.resize(values.size(), 0);
    missing_.resize(values.size(), 0);
  }
  values_.conservativeResize(Eigen::NoChange, cols() + 1);
  values_.col(cols() - 1) = values;
  missing_.conservativeResize(Eigen::NoChange, missing_.cols() + 1);
  missing_.col(missing_.cols() - 1) = values.array().isNaN();
  names_.push_back(std::move(name));
}

PanelTable PanelTable::subset(const std::vector<Eigen::Index>& rows) const {
  PanelTable out;
  out.names_ = names_;
  out.non_numeric_ = non_numeric_;
  out.values_.resize(static_cast<Eigen::Index>(rows.size()), cols());
  out.missing_.resize(static_cast<Eigen::Index>(rows.size()), cols());
  out.row_ids_.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (r < 0 || r >= this->rows()) throw std::out_of_range("subset: row index out of range");
    out.values_.row(static_cast<Eigen::Index>(i)) = values_.row(r);
    out.missing_.row(static_cast<Eigen::Index>(i)) = missing_.row(r);
    out.row_ids_.push_back(row_ids_[static_cast<std::size_t>(r)]);
  }
  return out;
}

std::pair<PanelTable, DeletionReport> listwise_delete(const PanelTable& table,
                                                      const std::vector<std::string>& columns) {
  std::vector<Eigen::Index> idx;
  for (const auto& c : columns) {
    if (table.non_numeric().count(c)) throw NonNumericColumn("modeling column '" + c + "' is not numeric");
    idx.push_back(table.index_of(c));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    bool ok = true;
    for (auto j : idx) ok = ok && !table.missing()(i, j);
    if (ok) keep.push_back(i);
  }
  DeletionReport rep;
  rep.input_rows = table.rows();
  rep.retained_rows = static_cast<Eigen::Index>(keep.size());
  rep.deleted_rows = rep.input_rows - rep.retained_rows;
  return {table.subset(keep), rep};
}

PanelTable parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw CsvError("csv: missing header row", line_no);
  if (!header.front().empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

  std::vector<std::vector<double>> cols(header.size());
  std::vector<bool> text(header.size(), false);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw CsvError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                         " fields, header has " + std::to_string(header.size()),
                     line_no);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto& f = fields[j];
      double x = kNaN;
      if (!f.empty() && f != "NA") {
        const char* b = f.data();
        const char* e = b + f.size();
        if (*b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, x);
        if (ec != std::errc() || p != e) {
          x = kNaN;
          text[j] = true;
        }
      }
      cols[j].push_back(x);
    }
  }
  const auto n = static_cast<Eigen::Index>(cols.empty() ? 0 : cols.front().size());
  Eigen::MatrixXd values(n, static_cast<Eigen::Index>(header.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    values.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(cols[j].data(), n);
  PanelTable table(header, std::move(values));
  for (std::size_t j = 0; j < text.size(); ++j)
    if (text[j]) table.mark_non_numeric(header[j]);
  return table;
}

PanelTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_csv(in);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void write_csv(const PanelTable& table, std::ostream& out) {
  for (std::size_t j = 0; j < table.names().size(); ++j) out << (j ? "," : "") << table.names()[j];
  out << '\n';
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) out << (j ? "," : "") << format_number(table.values()(i, j));
    out << '\n';
  }
}

void save_csv(const PanelTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_csv(table, out);
}

namespace {

// Row indices grouped by `group`, each group sorted by `time`.
std::map<double, std::vector<Eigen::Index>> ordered_groups(const PanelTable& table, std::string_view group,
                                                           std::string_view time) {
  const Eigen::VectorXd g = table.column(group);
  const Eigen::VectorXd t = table.column(time);
  std::map<double, std::vector<Eigen::Index>> out;
  for (Eigen::Index i = 0; i < table.rows(); ++i) out[g[i]].push_back(i);
  for (auto& [key, rows] : out)
    std::stable_sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) { return t[a] < t[b]; });
  return out;
}

}  // namespace

Eigen::VectorXd lag_difference(const PanelTable& table, std::string_view column, std::string_view group,
                               std::string_view time) {
  const Eigen::VectorXd x = table.column(column);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(table.rows(), kNaN);
  for (const auto& [key, rows] : ordered_groups(table, group, time))
    for (std::size_t k = 1; k < rows.size(); ++k) out[rows[k]] = x[rows[k]] - x[rows[k - 1]];
  return out;
}

Eigen::VectorXd peace_years(const PanelTable& table, std::string_view event, std::string_view group,
                            std::string_view time) {
  const Eigen::VectorXd e = table.column(event);
  const Eigen::VectorXd t = table.column(time);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(table.rows(), kNaN);
  for (const auto& [key, rows] : ordered_groups(table, group, time)) {
    double last = t[rows.front()];
    for (auto r : rows) {
      out[r] = t[r] - last;
      if (e[r] == 1.0) last = t[r];
    }
  }
  return out;
}

}  // namespace copbp
