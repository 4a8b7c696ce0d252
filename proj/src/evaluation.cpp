#include "copbp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace copbp {

PrCurve pr_curve(const Eigen::Ref<const Eigen::VectorXd>& scores, const Eigen::Ref<const Eigen::VectorXd>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("pr_curve: scores and labels differ in length");
  if (!scores.allFinite()) throw std::invalid_argument("pr_curve: scores must be finite");
  PrCurve c;
  c.n_total = scores.size();
  c.n_positives = static_cast<Eigen::Index>((labels.array() == 1.0).count());
  if (c.n_positives == 0) throw std::invalid_argument("pr_curve: no positive labels");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

  const auto P = static_cast<double>(c.n_positives);
  double tp = 0.0, fp = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      (labels[order[k]] == 1.0 ? tp : fp) += 1.0;
      ++k;
    }
    c.points.push_back({s, tp / P, tp / (tp + fp)});
  }
  c.auc = step_auc(c.points);
  return c;
}

double step_auc(const std::vector<PrPoint>& points) {
  double auc = 0.0, prev_recall = 0.0;
  for (const auto& p : points) {
    auc += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return auc;
}

namespace {

std::vector<Eigen::Index> permutation(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit bounded draw, independent of std::shuffle.
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
}

}  // namespace

SplitPlan make_split(Eigen::Index n_rows, std::uint64_t seed, double fraction) {
  if (n_rows < 2) throw std::invalid_argument("make_split: need at least two rows");
  check_fraction(fraction);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = fraction;
  const auto perm = permutation(n_rows, seed);
  auto n_train = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n_rows) - 1e-9));
  n_train = std::clamp<Eigen::Index>(n_train, 1, n_rows - 1);
  plan.train_indices.assign(perm.begin(), perm.begin() + n_train);
  plan.test_indices.assign(perm.begin() + n_train, perm.end());
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

SplitPlan make_group_split(const Eigen::Ref<const Eigen::VectorXd>& groups, std::uint64_t seed, double fraction) {
  check_fraction(fraction);
  std::map<double, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  if (members.size() < 2) throw std::invalid_argument("make_group_split: need at least two groups");
  std::vector<double> keys;
  for (const auto& [k, v] : members) keys.push_back(k);
  const auto perm = permutation(static_cast<Eigen::Index>(keys.size()), seed);
  auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(keys.size()) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, keys.size() - 1);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = fraction;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    auto& dst = k < n_train ? plan.train_indices : plan.test_indices;
    const auto& rows = members[keys[static_cast<std::size_t>(perm[k])]];
    dst.insert(dst.end(), rows.begin(), rows.end());
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

std::string SelectionReport::winner() const {
  if (ranked.empty()) throw std::logic_error("empty selection report");
  return ranked.front().copula;
}

Eigen::VectorXd predict_joint(const FitResult& fit, const PanelTable& rows, PredictionMode mode) {
  if (!fit.layout || !fit.spec) throw std::invalid_argument("predict_joint: needs a joint fit");
  const JointData d = make_joint_data(rows, *fit.spec, *fit.layout);
  return predict_conflict(fit.estimates, d, *fit.layout, fit.fitted_copula(), mode);
}

SelectionReport select_copula(const PanelTable& data, const ModelSpec& spec_template,
                              const std::vector<CopulaSpec>& copulas, const SplitPlan& split, PredictionMode mode,
                              const FitOptions& options) {
  if (copulas.empty()) throw std::invalid_argument("select_copula: empty copula list");
  if (split.train_indices.empty() || split.test_indices.empty())
    throw std::invalid_argument("select_copula: split has an empty side");
  const PanelTable train = data.subset(split.train_indices);
  const PanelTable test = data.subset(split.test_indices);
  const Eigen::VectorXd labels = test.column(spec_template.conflict_outcome);

  SelectionReport rep;
  for (const auto& c : copulas) {
    ModelSpec spec = spec_template;
    spec.copula = c;
    SelectionRecord rec;
    rec.copula = to_code(c);
    try {
      const FitResult f = fit(train, spec, options);
      rec.converged = f.converged;
      rec.info_positive_definite = f.info_positive_definite;
      rec.loglik = f.loglik;
      rec.message = f.message;
      if (f.estimates.allFinite()) rec.pr_auc = pr_curve(predict_joint(f, test, mode), labels).auc;
    } catch (const std::exception& e) {
      rec.converged = false;
      rec.message = e.what();
    }
    rep.ranked.push_back(std::move(rec));
  }
  std::stable_sort(rep.ranked.begin(), rep.ranked.end(), [](const SelectionRecord& a, const SelectionRecord& b) {
    const bool ua = a.converged && a.pr_auc.has_value();
    const bool ub = b.converged && b.pr_auc.has_value();
    if (ua != ub) return ua;
    if (!ua) return false;
    return *a.pr_auc > *b.pr_auc;
  });
  return rep;
}

double improvement_pct(double baseline_auc, double joint_auc) {
  if (baseline_auc == joint_auc) return 0.0;
  return 100.0 * (joint_auc - baseline_auc) / baseline_auc;
}

ModelComparison compare_models(const FitResult& baseline, const FitResult& joint, const PanelTable& data,
                               const SplitPlan& split, PredictionMode mode) {
  const auto fp = row_fingerprint(data.subset(split.train_indices).row_ids());
  if (baseline.data_fingerprint != fp || joint.data_fingerprint != fp)
    throw std::invalid_argument("compare_models: fits were not trained on this split's training rows");
  const PanelTable train = data.subset(split.train_indices);
  const PanelTable test = data.subset(split.test_indices);
  const std::string& y = joint.spec->conflict_outcome;

  ModelComparison out;
  out.baseline_in_sample = pr_curve(predict_single(baseline, train), train.column(y));
  out.joint_in_sample = pr_curve(predict_joint(joint, train, mode), train.column(y));
  out.baseline_out_of_sample = pr_curve(predict_single(baseline, test), test.column(y));
  out.joint_out_of_sample = pr_curve(predict_joint(joint, test, mode), test.column(y));
  out.improvement_in_sample_pct = improvement_pct(out.baseline_in_sample.auc, out.joint_in_sample.auc);
  out.improvement_out_of_sample_pct = improvement_pct(out.baseline_out_of_sample.auc, out.joint_out_of_sample.auc);
  return out;
}

}  // namespace copbp
