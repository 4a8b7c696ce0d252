#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copbp/estimator.hpp"
#include "copbp/model.hpp"

namespace copbp {

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

/// Precision-recall curve over distinct score thresholds (ties form one
/// threshold), highest threshold first. `auc` is the step-wise integral:
/// each recall increment weighted by the precision at its threshold.
struct PrCurve {
  std::vector<PrPoint> points;
  double auc = 0.0;
  Eigen::Index n_positives = 0;
  Eigen::Index n_total = 0;
};

PrCurve pr_curve(const Eigen::Ref<const Eigen::VectorXd>& scores, const Eigen::Ref<const Eigen::VectorXd>& labels);

/// Step-wise area under stored points.
double step_auc(const std::vector<PrPoint>& points);

struct SplitPlan {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  std::vector<Eigen::Index> train_indices;
  std::vector<Eigen::Index> test_indices;
};

/// Random permutation of rows; the first ceil(fraction * n) rows train.
SplitPlan make_split(Eigen::Index n_rows, std::uint64_t seed, double fraction = 0.7);

/// Same, keeping all rows that share a group value on one side.
SplitPlan make_group_split(const Eigen::Ref<const Eigen::VectorXd>& groups, std::uint64_t seed,
                           double fraction = 0.7);

struct SelectionRecord {
  std::string copula;
  bool converged = false;
  bool info_positive_definite = false;
  std::optional<double> pr_auc;
  double loglik = 0.0;
  std::string message;
};

struct SelectionReport {
  std::vector<SelectionRecord> ranked;  // converged fits by descending PR-AUC, failures last
  std::string winner() const;
};

/// Fits every copula on the training rows and scores conflict predictions on
/// the test rows by PR-AUC.
SelectionReport select_copula(const PanelTable& data, const ModelSpec& spec_template,
                              const std::vector<CopulaSpec>& copulas, const SplitPlan& split,
                              PredictionMode mode = PredictionMode::Conditional, const FitOptions& options = {});

struct ModelComparison {
  PrCurve baseline_in_sample, joint_in_sample;
  PrCurve baseline_out_of_sample, joint_out_of_sample;
  double improvement_in_sample_pct = 0.0;
  double improvement_out_of_sample_pct = 0.0;
};

double improvement_pct(double baseline_auc, double joint_auc);

/// Throws std::invalid_argument unless both fits were trained on the split's
/// training rows.
ModelComparison compare_models(const FitResult& baseline, const FitResult& joint, const PanelTable& data,
                               const SplitPlan& split, PredictionMode mode = PredictionMode::Conditional);

/// Conflict predictions of a joint fit on arbitrary rows.
Eigen::VectorXd predict_joint(const FitResult& fit, const PanelTable& rows, PredictionMode mode);

}  // namespace copbp
