#include "copbp/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/version.hpp>
#include <Eigen/Core>

#include "copbp/effects.hpp"
#include "copbp/estimator.hpp"
#include "copbp/evaluation.hpp"
#include "copbp/table.hpp"

namespace copbp {

namespace {

// Raised when a command ran but its numerical result is unusable.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  const RunConfig& config;
  std::ostream& out;
  std::vector<std::string> artifacts;
  Json inputs = Json::array();
  Json deletion;
  int exit_code = kExitOk;

  std::filesystem::path path(const std::string& name) const { return config.output_dir / name; }

  void text(const std::string& name, const std::string& body) {
    write_text(path(name), body);
    artifacts.push_back(name);
  }
  void json(const std::string& name, const Json& j) {
    write_json(path(name), j);
    artifacts.push_back(name);
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_columns(const PanelTable& table, const std::vector<std::string>& columns) {
  for (const std::string& c : columns)
    if (!table.has(c)) throw SpecError("column '" + c + "' is not in the data header");
}

// Loads the panel and drops incomplete rows over the modeling columns.
PanelTable load_panel(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  if (cfg.data_path.empty()) throw ConfigError("config: 'data' is required for this command");
  cfg.validate_roles();
  PanelTable raw = load_csv(cfg.data_path);
  ctx.inputs.push_back(Json{{"path", cfg.data_path.string()}, {"fnv1a64", file_digest(cfg.data_path)}});

  std::vector<std::string> cols = cfg.model_spec().modeling_columns();
  if (cfg.split_group) cols.push_back(*cfg.split_group);
  require_columns(raw, cols);
  auto [table, report] = listwise_delete(raw, cols);
  ctx.deletion = Json{{"input_rows", report.input_rows},
                      {"deleted_rows", report.deleted_rows},
                      {"retained_rows", report.retained_rows}};
  if (table.rows() == 0) throw SpecError("no complete rows remain after listwise deletion");
  return table;
}

SplitPlan split_for(const RunConfig& cfg, const PanelTable& table) {
  if (cfg.split_group) return make_group_split(table.column(*cfg.split_group), cfg.split_seed, cfg.split_fraction);
  return make_split(table.rows(), cfg.split_seed, cfg.split_fraction);
}

AteOptions ate_options(const RunConfig& cfg) {
  AteOptions o;
  o.n_sims = cfg.n_sims;
  o.alpha = cfg.alpha;
  o.seed = cfg.ate_seed;
  o.treated_only = cfg.treated_only;
  return o;
}

const CopulaSpec& single_copula(const RunConfig& cfg) {
  if (!cfg.copula) throw ConfigError("config: 'copula' is required for this command");
  return *cfg.copula;
}

Json split_json(const SplitPlan& split, const RunConfig& cfg) {
  Json j;
  j["seed"] = split.seed;
  j["fraction"] = split.train_fraction;
  j["group"] = cfg.split_group ? Json(*cfg.split_group) : Json(nullptr);
  j["train_rows"] = split.train_indices.size();
  j["test_rows"] = split.test_indices.size();
  return j;
}

std::string one_line(const FitResult& f) {
  std::ostringstream s;
  s << f.model << (f.spec ? " " + to_code(f.spec->copula) : std::string()) << ": converged=" << f.converged
    << " info_pd=" << f.info_positive_definite << " loglik=" << format_number(f.loglik);
  if (f.spec) {
    if (auto z = z_statistic(f, "gamma")) s << " gamma_z=" << format_number(*z);
  }
  return s.str();
}

// ------------------------------------------------------------- commands ---

void cmd_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  if (!cfg.simulate) throw ConfigError("config: a 'simulate' block is required");
  auto [table, truth] = generate(*cfg.simulate);
  const std::filesystem::path data = cfg.data_path.empty() ? ctx.path("panel.csv") : cfg.data_path;
  if (data.has_parent_path()) std::filesystem::create_directories(data.parent_path());
  save_csv(table, data);
  ctx.artifacts.push_back(data.string());
  ctx.json("truth.json", to_json(truth));
  ctx.out << "simulate: " << table.rows() << " rows -> " << data.string() << ", true ATE "
          << format_number(truth.true_ate) << "\n";
}

FitResult checked_fit(Context& ctx, const PanelTable& table, const ModelSpec& spec, const char* file) {
  FitResult f = fit(table, spec);
  ctx.json(file, to_json(f));
  ctx.out << one_line(f) << "\n";
  if (!f.converged) ctx.exit_code = kExitNumericalFailure;
  return f;
}

void cmd_fit(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  checked_fit(ctx, table, ctx.config.model_spec(single_copula(ctx.config)), "fit.json");
}

void cmd_baseline(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  const FitResult f = fit_baseline(table, baseline_spec(ctx.config.model_spec()));
  ctx.json("baseline.json", to_json(f));
  ctx.out << one_line(f) << "\n";
  if (!f.converged) ctx.exit_code = kExitNumericalFailure;
}

void cmd_ate(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  const FitResult f = checked_fit(ctx, table, ctx.config.model_spec(single_copula(ctx.config)), "fit.json");
  if (!f.converged || !f.info_positive_definite)
    throw NumericalFailure("ATE needs a converged fit with a positive definite information matrix");
  const AteResult a = ate(f, table, ate_options(ctx.config));
  Json j;
  j["copula"] = to_code(f.spec->copula);
  j["seed"] = ctx.config.ate_seed;
  j["result"] = to_json(a);
  ctx.json("ate.json", j);

  std::ostringstream csv;
  csv << "draw,effect\n";
  for (Eigen::Index i = 0; i < a.draws.size(); ++i) csv << i << ',' << format_number(a.draws[i]) << '\n';
  ctx.text("ate_draws.csv", csv.str());

  Bar bar{to_code(f.spec->copula), a.point, a.ci_lower, a.ci_upper, false};
  ctx.text("ate.svg", svg_bar_chart(std::string(a.treated_only ? "ATT" : "ATE") + " with simulation interval",
                                    "effect on P(outcome)", {bar}));
  ctx.out << (a.treated_only ? "ATT " : "ATE ") << format_number(a.point) << " [" << format_number(a.ci_lower)
          << ", " << format_number(a.ci_upper) << "]\n";
}

void cmd_sensitivity(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  const SensitivityReport rep =
      copula_sensitivity(table, ctx.config.model_spec(), ctx.config.copula_list(), ate_options(ctx.config));
  ctx.text("sensitivity.csv", sensitivity_csv(rep));
  ctx.json("sensitivity.json", to_json(rep));

  std::vector<Bar> z_bars, ate_bars;
  int usable = 0;
  for (const SensitivityRecord& r : rep.records) {
    if (!r.converged || !r.gamma_z) continue;
    ++usable;
    z_bars.push_back({r.copula, *r.gamma_z, std::nullopt, std::nullopt, std::abs(*r.gamma_z) >= kZCritical05});
    if (r.ate) ate_bars.push_back({r.copula, r.ate->point, r.ate->ci_lower, r.ate->ci_upper, false});
  }
  ctx.text("sensitivity_z.svg",
           svg_bar_chart("z statistic of the treatment by copula", "z", z_bars, {-kZCritical05, kZCritical05}));
  ctx.text("sensitivity_ate.svg", svg_bar_chart("ATE by copula", "effect on P(outcome)", ate_bars));
  ctx.out << "sensitivity: " << usable << " of " << rep.records.size() << " specs converged with usable z\n";
  if (usable == 0) throw NumericalFailure("no copula in the sweep converged");
}

void cmd_select(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  const SplitPlan split = split_for(ctx.config, table);
  const SelectionReport rep =
      select_copula(table, ctx.config.model_spec(), ctx.config.copula_list(), split, ctx.config.prediction);
  ctx.text("selection.csv", selection_csv(rep));
  Json j = to_json(rep);
  j["split"] = split_json(split, ctx.config);
  ctx.json("selection.json", j);

  std::vector<Bar> bars;
  for (const SelectionRecord& r : rep.ranked)
    if (r.converged && r.pr_auc) bars.push_back({r.copula, *r.pr_auc, std::nullopt, std::nullopt, bars.empty()});
  ctx.text("selection.svg", svg_bar_chart("Out-of-sample PR-AUC by copula", "PR-AUC", bars));
  if (rep.winner().empty()) throw NumericalFailure("no copula converged on the training rows");
  ctx.out << "select-copula: winner " << rep.winner() << " (PR-AUC " << format_number(*rep.ranked.front().pr_auc)
          << ")\n";
}

void cmd_compare(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const PanelTable table = load_panel(ctx);
  const SplitPlan split = split_for(cfg, table);
  const PanelTable train = table.subset(split.train_indices);
  const ModelSpec spec = cfg.model_spec(single_copula(cfg));
  const FitResult base = fit_baseline(train, baseline_spec(spec));
  const FitResult joint = fit(train, spec);
  ctx.out << one_line(base) << "\n" << one_line(joint) << "\n";
  if (!base.converged || !joint.converged) {
    ctx.json("baseline.json", to_json(base));
    ctx.json("fit.json", to_json(joint));
    throw NumericalFailure("a model in the comparison did not converge");
  }
  const ModelComparison cmp = compare_models(base, joint, table, split, cfg.prediction);
  Json j = to_json(cmp);
  j["copula"] = to_code(spec.copula);
  j["split"] = split_json(split, cfg);
  ctx.json("compare.json", j);
  ctx.text("pr_curves.csv", pr_curves_csv(cmp));

  auto series = [](const std::string& label, const PrCurve& c) {
    Series s{label, {}, {}};
    for (const PrPoint& p : c.points) {
      s.x.push_back(p.recall);
      s.y.push_back(p.precision);
    }
    return s;
  };
  ctx.text("pr_curves.svg", svg_line_chart("Precision-recall", "recall", "precision",
                                           {series("baseline, in sample", cmp.baseline_in_sample),
                                            series("joint, in sample", cmp.joint_in_sample),
                                            series("baseline, held out", cmp.baseline_out_of_sample),
                                            series("joint, held out", cmp.joint_out_of_sample)}));
  ctx.out << "compare: held-out PR-AUC baseline " << format_number(cmp.baseline_out_of_sample.auc) << ", joint "
          << format_number(cmp.joint_out_of_sample.auc) << "\n";
}

void cmd_iv_test(Context& ctx) {
  const PanelTable table = load_panel(ctx);
  const LrTestResult lr = instrument_strength_test(table, ctx.config.model_spec());
  Json j = to_json(lr);
  j["instruments"] = ctx.config.instruments;
  ctx.json("iv_test.json", j);
  ctx.out << "iv-test: LR " << format_number(lr.statistic) << " on " << lr.df << " df, p = "
          << format_number(lr.p_value) << "\n";
}

const std::map<std::string, std::function<void(Context&)>, std::less<>>& dispatch() {
  static const std::map<std::string, std::function<void(Context&)>, std::less<>> table = {
      {"fit", cmd_fit},
      {"baseline", cmd_baseline},
      {"select-copula", cmd_select},
      {"ate", cmd_ate},
      {"sensitivity", cmd_sensitivity},
      {"compare", cmd_compare},
      {"simulate", cmd_simulate},
      {"iv-test", cmd_iv_test},
  };
  return table;
}

Json error_json(const std::string& command, const char* kind, const std::string& message) {
  Json e;
  e["command"] = command;
  e["kind"] = kind;
  e["message"] = message;
  return Json{{"error", e}};
}

// Returns the exit code matching an in-flight exception.
std::pair<int, std::string> classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const NumericalFailure& e) {
    return {kExitNumericalFailure, e.what()};
  } catch (const NonFiniteLikelihood& e) {
    return {kExitNumericalFailure, e.what()};
  } catch (const SamplerError& e) {
    return {kExitNumericalFailure, e.what()};
  } catch (const CsvError& e) {
    return {kExitUserError, e.what()};
  } catch (const std::logic_error& e) {
    // invalid_argument, domain_error and out_of_range cover config, spec and column errors
    return {kExitUserError, e.what()};
  } catch (const std::filesystem::filesystem_error& e) {
    return {kExitUserError, e.what()};
  } catch (const std::exception& e) {
    return {kExitNumericalFailure, e.what()};
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, f] : dispatch()) v.push_back(k);
    return v;
  }();
  return names;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto it = dispatch().find(command);
  if (it == dispatch().end()) {
    err << error_json(command, "user_error", "unknown command '" + command + "'").dump() << "\n";
    return kExitUserError;
  }
  Context ctx{config, out, {}, Json::array(), nullptr, kExitOk};
  std::string failure;
  int code = kExitOk;
  try {
    std::filesystem::create_directories(config.output_dir);
    it->second(ctx);
    code = ctx.exit_code;
    if (code != kExitOk) failure = "model did not converge";
  } catch (...) {
    std::tie(code, failure) = classify(std::current_exception());
  }

  std::error_code ec;
  const std::filesystem::path err_path = config.output_dir / "error.json";
  if (code != kExitOk) {
    const Json e = error_json(command, code == kExitUserError ? "user_error" : "numerical_failure", failure);
    err << e.dump() << "\n";
    if (std::filesystem::is_directory(config.output_dir, ec)) {
      try {
        write_json(err_path, e);
      } catch (const std::exception&) {
      }
    }
  } else {
    std::filesystem::remove(err_path, ec);
  }

  if (std::filesystem::is_directory(config.output_dir, ec)) {
    Json m;
    m["command"] = command;
    m["tool"] = {{"name", "copbp"}, {"version", kVersion}};
    m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"boost", BOOST_LIB_VERSION}};
    m["created_utc"] = utc_timestamp();
    m["exit_code"] = code;
    m["seeds"] = {{"split", config.split_seed},
                  {"ate", config.ate_seed},
                  {"simulate", config.simulate ? Json(config.simulate->seed) : Json(nullptr)}};
    m["inputs"] = ctx.inputs;
    m["listwise_deletion"] = ctx.deletion;
    m["outputs"] = ctx.artifacts;
    m["config"] = config.source;
    try {
      write_json(config.output_dir / ("manifest-" + command + ".json"), m);
    } catch (const std::exception& e) {
      err << error_json(command, "user_error", e.what()).dump() << "\n";
      if (code == kExitOk) code = kExitUserError;
    }
  }
  return code;
}

int run_transform(const TransformRequest& req, std::ostream& out, std::ostream& err) {
  try {
    PanelTable table = load_csv(req.input);
    Eigen::VectorXd col;
    std::string name;
    if (req.kind == "lag-diff") {
      col = lag_difference(table, req.column, req.group, req.time);
      name = req.name.value_or("d_" + req.column);
    } else if (req.kind == "peace-years") {
      col = peace_years(table, req.column, req.group, req.time);
      name = req.name.value_or("peace_years");
    } else {
      throw std::invalid_argument("unknown transform '" + req.kind + "' (lag-diff or peace-years)");
    }
    if (table.has(name)) throw std::invalid_argument("column '" + name + "' already exists");
    table.add_column(name, col);
    if (req.output.has_parent_path()) std::filesystem::create_directories(req.output.parent_path());
    save_csv(table, req.output);
    out << req.kind << ": added column '" << name << "' -> " << req.output.string() << "\n";
    return kExitOk;
  } catch (...) {
    auto [code, msg] = classify(std::current_exception());
    err << error_json("transform " + req.kind, code == kExitUserError ? "user_error" : "numerical_failure", msg)
               .dump()
        << "\n";
    return code;
  }
}

}  // namespace copbp
