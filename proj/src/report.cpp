#include "copbp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace copbp {

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <class T>
Json optional_number(const std::optional<T>& x) {
  return x && std::isfinite(*x) ? Json(*x) : Json(nullptr);
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

std::string csv_field(const std::optional<double>& x) { return x ? format_number(*x) : std::string("NA"); }

std::string fmt(double x, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round tick spacing covering [lo, hi] with roughly five intervals.
double tick_step(double lo, double hi) {
  double span = hi - lo;
  if (!(span > 0)) return 1.0;
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

Json to_json(const FitResult& fit) {
  Json j;
  j["model"] = fit.model;
  if (fit.spec) j["copula"] = to_code(fit.spec->copula);
  j["converged"] = fit.converged;
  j["info_positive_definite"] = fit.info_positive_definite;
  j["theta_at_boundary"] = fit.theta_at_boundary;
  j["iterations"] = fit.iterations;
  j["max_abs_gradient"] = number_or_null(fit.max_abs_gradient);
  j["message"] = fit.message;
  j["n_obs"] = fit.n_obs;
  j["loglik"] = number_or_null(fit.loglik);
  j["penalized_loglik"] = number_or_null(fit.penalized_loglik);
  j["edf"] = number_or_null(fit.edf);
  j["aic"] = number_or_null(fit.aic);

  Json coefs = Json::array();
  for (const ZStatistic& z : z_statistics(fit)) {
    Json c;
    c["name"] = z.name;
    c["estimate"] = number_or_null(z.estimate);
    c["std_error"] = optional_number(z.std_error);
    c["z"] = optional_number(z.z);
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);

  if (fit.spec) {
    const CopulaSpec cop = fit.fitted_copula();
    Json d;
    d["theta_unconstrained"] = number_or_null(cop.theta_unconstrained);
    d["theta"] = number_or_null(cop.natural());
    double tau = std::numeric_limits<double>::quiet_NaN();
    if (cop.family != CopulaFamily::Plackett) tau = kendall_tau(cop);
    d["kendall_tau"] = number_or_null(tau);
    if (cop.family == CopulaFamily::StudentT) d["df"] = cop.df();
    j["dependence"] = std::move(d);
  }

  Json smooths = Json::array();
  auto add_smooths = [&](const std::string& eq, const std::vector<SmoothTerm>& terms) {
    for (const SmoothTerm& t : terms) {
      Json s;
      s["equation"] = eq;
      s["column"] = t.column;
      s["basis_dim"] = t.basis_dim;
      s["lambda"] = number_or_null(t.lambda);
      smooths.push_back(std::move(s));
    }
  };
  if (fit.layout) {
    add_smooths("eq1", fit.layout->eq1.smooths);
    add_smooths("eq2", fit.layout->eq2.smooths);
  } else if (fit.design) {
    add_smooths("outcome", fit.design->smooths);
  }
  j["smooths"] = std::move(smooths);

  Json vcov = Json::array();
  for (Eigen::Index r = 0; r < fit.vcov.rows(); ++r) vcov.push_back(vector_json(fit.vcov.row(r).transpose()));
  j["vcov"] = std::move(vcov);
  return j;
}

Json to_json(const AteResult& ate, bool with_draws) {
  Json j;
  j["estimand"] = ate.treated_only ? "ATT" : "ATE";
  j["point"] = number_or_null(ate.point);
  j["ci_lower"] = number_or_null(ate.ci_lower);
  j["ci_upper"] = number_or_null(ate.ci_upper);
  j["alpha"] = ate.alpha;
  j["n_sims"] = ate.n_sims;
  if (with_draws) j["draws"] = vector_json(ate.draws);
  return j;
}

Json to_json(const SensitivityReport& report) {
  Json rows = Json::array();
  for (const SensitivityRecord& r : report.records) {
    Json j;
    j["copula"] = r.copula;
    j["converged"] = r.converged;
    j["info_positive_definite"] = r.info_positive_definite;
    j["gamma"] = number_or_null(r.gamma);
    j["gamma_se"] = optional_number(r.gamma_se);
    j["gamma_z"] = optional_number(r.gamma_z);
    if (r.ate) {
      j["ate"] = number_or_null(r.ate->point);
      j["ate_ci_lower"] = number_or_null(r.ate->ci_lower);
      j["ate_ci_upper"] = number_or_null(r.ate->ci_upper);
    } else {
      j["ate"] = nullptr;
      j["ate_ci_lower"] = nullptr;
      j["ate_ci_upper"] = nullptr;
    }
    j["loglik"] = number_or_null(r.loglik);
    j["aic"] = number_or_null(r.aic);
    j["message"] = r.message;
    rows.push_back(std::move(j));
  }
  return Json{{"records", std::move(rows)}};
}

Json to_json(const SelectionReport& report) {
  Json rows = Json::array();
  int rank = 0;
  for (const SelectionRecord& r : report.ranked) {
    Json j;
    j["rank"] = r.pr_auc ? Json(++rank) : Json(nullptr);
    j["copula"] = r.copula;
    j["converged"] = r.converged;
    j["info_positive_definite"] = r.info_positive_definite;
    j["pr_auc"] = optional_number(r.pr_auc);
    j["loglik"] = number_or_null(r.loglik);
    j["message"] = r.message;
    rows.push_back(std::move(j));
  }
  Json out;
  out["winner"] = report.winner().empty() ? Json(nullptr) : Json(report.winner());
  out["ranked"] = std::move(rows);
  return out;
}

Json to_json(const PrCurve& curve, bool with_points) {
  Json j;
  j["auc"] = number_or_null(curve.auc);
  j["n_positives"] = curve.n_positives;
  j["n_total"] = curve.n_total;
  if (with_points) {
    Json pts = Json::array();
    for (const PrPoint& p : curve.points) pts.push_back(Json::array({p.threshold, p.recall, p.precision}));
    j["points"] = std::move(pts);
  }
  return j;
}

Json to_json(const ModelComparison& cmp) {
  Json j;
  j["in_sample"] = {{"baseline", to_json(cmp.baseline_in_sample)},
                    {"joint", to_json(cmp.joint_in_sample)},
                    {"improvement_pct", number_or_null(cmp.improvement_in_sample_pct)}};
  j["out_of_sample"] = {{"baseline", to_json(cmp.baseline_out_of_sample)},
                        {"joint", to_json(cmp.joint_out_of_sample)},
                        {"improvement_pct", number_or_null(cmp.improvement_out_of_sample_pct)}};
  return j;
}

Json to_json(const LrTestResult& lr) {
  return Json{{"statistic", number_or_null(lr.statistic)}, {"df", lr.df}, {"p_value", number_or_null(lr.p_value)}};
}

Json to_json(const DgpSpec& dgp) {
  Json j;
  j["n_rows"] = dgp.n_rows;
  j["beta1"] = vector_json(dgp.beta1_true);
  j["beta2"] = vector_json(dgp.beta2_true);
  j["gamma"] = dgp.gamma_true;
  j["copula"] = to_code(dgp.copula_true);
  j["theta"] = dgp.copula_true.natural();
  if (dgp.copula_true.family == CopulaFamily::StudentT) j["df"] = dgp.copula_true.df();
  j["instrument_strength"] = dgp.instrument_strength;
  j["n_instruments"] = dgp.n_instruments;
  j["confounder_strength"] = dgp.confounder_strength;
  j["peace_effect"] = dgp.peace_effect;
  j["seed"] = dgp.seed;
  return j;
}

DgpSpec dgp_from_json(const Json& j) {
  DgpSpec d;
  auto vec = [](const Json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
  };
  if (j.contains("n_rows")) d.n_rows = j["n_rows"].get<Eigen::Index>();
  if (j.contains("beta1")) d.beta1_true = vec(j["beta1"]);
  if (j.contains("beta2")) d.beta2_true = vec(j["beta2"]);
  if (j.contains("gamma")) d.gamma_true = j["gamma"].get<double>();
  if (j.contains("copula")) {
    CopulaSpec c = from_code(j["copula"].get<std::string>());
    if (j.contains("df")) c.extra = j["df"].get<double>();
    if (j.contains("theta") && j.contains("kendall_tau"))
      throw std::invalid_argument("simulate: give either theta or kendall_tau, not both");
    if (j.contains("theta")) {
      c.theta_unconstrained = unlink(j["theta"].get<double>(), c.family);
    } else if (j.contains("kendall_tau")) {
      double tau = j["kendall_tau"].get<double>();
      // rotations by 90/270 flip the sign of dependence
      if (c.rotation == Rotation::Deg90 || c.rotation == Rotation::Deg270) tau = -tau;
      c.theta_unconstrained = unlink(theta_for_tau(c.family, tau), c.family);
    }
    d.copula_true = c;
  }
  if (j.contains("instrument_strength")) d.instrument_strength = j["instrument_strength"].get<double>();
  if (j.contains("n_instruments")) d.n_instruments = j["n_instruments"].get<int>();
  if (j.contains("confounder_strength")) d.confounder_strength = j["confounder_strength"].get<double>();
  if (j.contains("peace_effect")) d.peace_effect = j["peace_effect"].get<double>();
  if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
  d.validate();
  return d;
}

Json to_json(const TruthRecord& truth) {
  Json j;
  j["dgp"] = to_json(truth.dgp);
  j["true_ate"] = number_or_null(truth.true_ate);
  j["kendall_tau"] = number_or_null(truth.kendall_tau);
  j["treatment_prevalence"] = truth.treatment_prevalence;
  j["outcome_prevalence"] = truth.outcome_prevalence;
  return j;
}

std::string sensitivity_csv(const SensitivityReport& report) {
  std::ostringstream out;
  out << "copula,converged,info_positive_definite,gamma,gamma_se,gamma_z,ate,ate_ci_lower,ate_ci_upper,loglik,aic\n";
  for (const SensitivityRecord& r : report.records) {
    out << r.copula << ',' << int(r.converged) << ',' << int(r.info_positive_definite) << ','
        << format_number(r.gamma) << ',' << csv_field(r.gamma_se) << ',' << csv_field(r.gamma_z) << ','
        << csv_field(r.ate ? std::optional(r.ate->point) : std::nullopt) << ','
        << csv_field(r.ate ? std::optional(r.ate->ci_lower) : std::nullopt) << ','
        << csv_field(r.ate ? std::optional(r.ate->ci_upper) : std::nullopt) << ',' << format_number(r.loglik)
        << ',' << format_number(r.aic) << '\n';
  }
  return out.str();
}

std::string selection_csv(const SelectionReport& report) {
  std::ostringstream out;
  out << "rank,copula,converged,info_positive_definite,pr_auc,loglik\n";
  int rank = 0;
  for (const SelectionRecord& r : report.ranked) {
    out << (r.pr_auc ? std::to_string(++rank) : std::string("NA")) << ',' << r.copula << ',' << int(r.converged)
        << ',' << int(r.info_positive_definite) << ',' << csv_field(r.pr_auc) << ',' << format_number(r.loglik)
        << '\n';
  }
  return out.str();
}

std::string pr_curves_csv(const ModelComparison& cmp) {
  std::ostringstream out;
  out << "model,sample,threshold,precision,recall\n";
  auto emit = [&](const char* model, const char* sample, const PrCurve& c) {
    for (const PrPoint& p : c.points)
      out << model << ',' << sample << ',' << format_number(p.threshold) << ',' << format_number(p.precision)
          << ',' << format_number(p.recall) << '\n';
  };
  emit("baseline", "in_sample", cmp.baseline_in_sample);
  emit("joint", "in_sample", cmp.joint_in_sample);
  emit("baseline", "out_of_sample", cmp.baseline_out_of_sample);
  emit("joint", "out_of_sample", cmp.joint_out_of_sample);
  return out.str();
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars,
                          const std::vector<double>& refs) {
  const double width = std::max(480.0, 90.0 + 34.0 * static_cast<double>(bars.size()));
  const double height = 360.0, left = 70.0, right = 20.0, top = 40.0, bottom = 80.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double lo = 0.0, hi = 0.0;
  auto widen = [&](double x) {
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  };
  for (const Bar& b : bars) {
    widen(b.value);
    if (b.lower) widen(*b.lower);
    if (b.upper) widen(*b.upper);
  }
  for (double r : refs) widen(r);
  if (hi == lo) hi = lo + 1.0;
  const double step = tick_step(lo, hi);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0) << "\" height=\"" << fmt(height, 0)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
    << "</text>\n";
  for (double t = lo; t <= hi + step * 1e-9; t += step) {
    s << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(width - right) << "\" y1=\"" << fmt(y_of(t)) << "\" y2=\""
      << fmt(y_of(t)) << "\" stroke=\"#e5e5e5\"/>\n";
    s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y_of(t) + 4) << "\" text-anchor=\"end\">"
      << format_number(std::round(t / step) * step) << "</text>\n";
  }
  s << "<text transform=\"translate(16," << fmt(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(y_label) << "</text>\n";

  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    if (std::isfinite(b.value)) {
      const double y0 = y_of(0.0), y1 = y_of(b.value);
      s << "<rect x=\"" << fmt(cx - slot * 0.35) << "\" y=\"" << fmt(std::min(y0, y1)) << "\" width=\""
        << fmt(slot * 0.7) << "\" height=\"" << fmt(std::abs(y1 - y0)) << "\" fill=\""
        << (b.highlight ? "#d62728" : "#4c78a8") << "\"/>\n";
    }
    if (b.lower && b.upper) {
      s << "<line x1=\"" << fmt(cx) << "\" x2=\"" << fmt(cx) << "\" y1=\"" << fmt(y_of(*b.lower)) << "\" y2=\""
        << fmt(y_of(*b.upper)) << "\" stroke=\"black\"/>\n";
      for (double e : {*b.lower, *b.upper})
        s << "<line x1=\"" << fmt(cx - 5) << "\" x2=\"" << fmt(cx + 5) << "\" y1=\"" << fmt(y_of(e)) << "\" y2=\""
          << fmt(y_of(e)) << "\" stroke=\"black\"/>\n";
    }
    s << "<text transform=\"translate(" << fmt(cx + 4) << ',' << fmt(top + plot_h + 10)
      << ") rotate(60)\" text-anchor=\"start\">" << escape_xml(b.label) << "</text>\n";
  }
  for (double r : refs)
    s << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(width - right) << "\" y1=\"" << fmt(y_of(r)) << "\" y2=\""
      << fmt(y_of(r)) << "\" stroke=\"#555\" stroke-dasharray=\"5,4\"/>\n";
  s << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(width - right) << "\" y1=\"" << fmt(y_of(0.0))
    << "\" y2=\"" << fmt(y_of(0.0)) << "\" stroke=\"black\"/>\n";
  s << "</svg>\n";
  return s.str();
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  const double width = 520.0, height = 400.0, left = 60.0, right = 20.0, top = 40.0, bottom = 60.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double y_hi = 0.0;
  for (const Series& se : series)
    for (double y : se.y)
      if (std::isfinite(y)) y_hi = std::max(y_hi, y);
  if (y_hi <= 0.0) y_hi = 1.0;
  const double y_step = tick_step(0.0, y_hi);
  y_hi = std::ceil(y_hi / y_step) * y_step;
  auto x_of = [&](double x) { return left + plot_w * x; };
  auto y_of = [&](double y) { return top + plot_h * (1.0 - y / y_hi); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0) << "\" height=\"" << fmt(height, 0)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
    << "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    double t = 0.2 * k;
    s << "<line x1=\"" << fmt(x_of(t)) << "\" x2=\"" << fmt(x_of(t)) << "\" y1=\"" << fmt(top) << "\" y2=\""
      << fmt(top + plot_h) << "\" stroke=\"#e5e5e5\"/>\n";
    s << "<text x=\"" << fmt(x_of(t)) << "\" y=\"" << fmt(top + plot_h + 16) << "\" text-anchor=\"middle\">"
      << fmt(t, 1) << "</text>\n";
  }
  for (double t = 0.0; t <= y_hi + y_step * 1e-9; t += y_step) {
    s << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(width - right) << "\" y1=\"" << fmt(y_of(t)) << "\" y2=\""
      << fmt(y_of(t)) << "\" stroke=\"#e5e5e5\"/>\n";
    s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y_of(t) + 4) << "\" text-anchor=\"end\">"
      << format_number(std::round(t / y_step * 1e6) / 1e6 * y_step) << "</text>\n";
  }
  s << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(height - 18) << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n";
  s << "<text transform=\"translate(16," << fmt(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& se = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
      if (i) s << ' ';
      s << fmt(x_of(se.x[i])) << ',' << fmt(y_of(se.y[i]));
    }
    s << "\"/>\n";
    const double ly = top + 14.0 + 16.0 * static_cast<double>(k);
    s << "<line x1=\"" << fmt(width - right - 150) << "\" x2=\"" << fmt(width - right - 130) << "\" y1=\""
      << fmt(ly - 4) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << fmt(width - right - 124) << "\" y=\"" << fmt(ly) << "\">" << escape_xml(se.label)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace copbp
