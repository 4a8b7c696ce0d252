#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "copbp/datasim.hpp"
#include "copbp/model.hpp"
#include "copbp/report.hpp"

namespace copbp {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything a command needs, read from one JSON file. Relative paths are
/// resolved against the directory holding that file.
///
/// {
///   "data": "panel.csv", "output": "out",
///   "treatment": "treat", "outcome": "conflict",
///   "eq1": ["c1", "z1"], "eq2": ["c1"], "instruments": ["z1"],
///   "smooths": {"eq1": ["spline(peace, 10)"], "eq2": ["spline(peace, 10)"]},
///   "copula": "C180", "copulas": "all", "student_df": 3,
///   "split": {"seed": 7, "fraction": 0.7, "group": "dyad"},
///   "ate": {"n_sims": 250, "alpha": 0.05, "seed": 11, "treated_only": false},
///   "prediction": "conditional",
///   "simulate": {"n_rows": 5000, "copula": "C180", "kendall_tau": 0.4, ...}
/// }
struct RunConfig {
  std::filesystem::path data_path;
  std::filesystem::path output_dir = "copbp-out";

  std::string treatment;
  std::string outcome;
  std::vector<std::string> eq1;
  std::vector<std::string> eq2;
  std::vector<std::string> instruments;
  std::vector<SmoothDecl> eq1_smooths;
  std::vector<SmoothDecl> eq2_smooths;

  std::optional<CopulaSpec> copula;
  std::vector<CopulaSpec> copulas;  // empty means all 19 specs
  std::optional<double> student_df;

  std::uint64_t split_seed = 1;
  double split_fraction = 0.7;
  std::optional<std::string> split_group;

  int n_sims = 250;
  double alpha = 0.05;
  std::uint64_t ate_seed = 1;
  bool treated_only = false;

  PredictionMode prediction = PredictionMode::Conditional;
  std::optional<DgpSpec> simulate;

  Json source;  // the parsed document with paths made absolute

  /// Model spec for one copula (the configured one when `copula` is empty).
  ModelSpec model_spec(const std::optional<CopulaSpec>& copula = std::nullopt) const;
  /// The configured sweep, with student_df applied.
  std::vector<CopulaSpec> copula_list() const;
  /// Column-role checks that need no data.
  void validate_roles() const;
};

/// Accepts either a config document or a manifest holding one under "config".
RunConfig parse_config(const Json& document, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace copbp
