#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "copbp/datasim.hpp"
#include "copbp/effects.hpp"
#include "copbp/estimator.hpp"
#include "copbp/evaluation.hpp"

namespace copbp {

using Json = nlohmann::ordered_json;

Json to_json(const FitResult& fit);
Json to_json(const AteResult& ate, bool with_draws = true);
Json to_json(const SensitivityReport& report);
Json to_json(const SelectionReport& report);
Json to_json(const PrCurve& curve, bool with_points = false);
Json to_json(const ModelComparison& cmp);
Json to_json(const LrTestResult& lr);
Json to_json(const TruthRecord& truth);
Json to_json(const DgpSpec& dgp);
DgpSpec dgp_from_json(const Json& j);

std::string sensitivity_csv(const SensitivityReport& report);
std::string selection_csv(const SelectionReport& report);
/// Columns: model, sample, threshold, precision, recall.
std::string pr_curves_csv(const ModelComparison& cmp);

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  bool highlight = false;
};

/// Horizontal-axis labelled bar chart; dashed reference lines at `refs`.
std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars,
                          const std::vector<double>& refs = {});

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace copbp
