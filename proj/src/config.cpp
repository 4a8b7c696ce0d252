#include "copbp/config.hpp"

#include <fstream>
#include <set>

namespace copbp {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "data",     "output",     "treatment", "outcome", "eq1",        "eq2",   "instruments", "smooths",
    "copula",   "copulas",    "student_df", "split",  "ate",        "prediction", "simulate"};

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const Json& a = j.at(key);
  if (!a.is_array()) throw ConfigError(std::string("config: '") + key + "' must be a list of column names");
  for (const Json& e : a) {
    if (!e.is_string()) throw ConfigError(std::string("config: '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<SmoothDecl> smooth_list(const Json& smooths, const char* eq) {
  std::vector<SmoothDecl> out;
  if (!smooths.contains(eq)) return out;
  for (const Json& e : smooths.at(eq)) {
    if (e.is_string()) {
      out.push_back(parse_smooth(e.get<std::string>()));
    } else if (e.is_object()) {
      SmoothDecl d = parse_smooth(e.at("term").get<std::string>());
      if (e.contains("lambda")) d.lambda = e.at("lambda").get<double>();
      out.push_back(d);
    } else {
      throw ConfigError("config: smooth entries are \"spline(column, k)\" strings or {term, lambda} objects");
    }
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute() || base.empty()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

}  // namespace

ModelSpec RunConfig::model_spec(const std::optional<CopulaSpec>& cop) const {
  ModelSpec spec;
  spec.treatment_outcome = treatment;
  spec.conflict_outcome = outcome;
  spec.eq1_predictors = eq1;
  spec.eq2_predictors = eq2;
  spec.instruments = instruments;
  spec.eq1_smooths = eq1_smooths;
  spec.eq2_smooths = eq2_smooths;
  if (cop) spec.copula = *cop;
  else if (copula) spec.copula = *copula;
  if (student_df && spec.copula.family == CopulaFamily::StudentT) spec.copula.extra = student_df;
  return spec;
}

std::vector<CopulaSpec> RunConfig::copula_list() const {
  std::vector<CopulaSpec> list = copulas.empty() ? all_copula_specs() : copulas;
  if (student_df)
    for (CopulaSpec& c : list)
      if (c.family == CopulaFamily::StudentT) c.extra = student_df;
  return list;
}

void RunConfig::validate_roles() const {
  if (treatment.empty() || outcome.empty()) throw ConfigError("config: 'treatment' and 'outcome' are required");
  model_spec().validate();
}

RunConfig parse_config(const Json& document, const std::filesystem::path& base_dir) {
  if (!document.is_object()) throw ConfigError("config: top level must be an object");
  if (document.contains("config") && document.at("config").is_object())
    return parse_config(document.at("config"), base_dir);

  for (const auto& [key, value] : document.items())
    if (!kKnownKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");

  RunConfig c;
  try {
    Json src = document;
    if (document.contains("data")) {
      c.data_path = resolve(document.at("data").get<std::string>(), base_dir);
      src["data"] = c.data_path.string();
    }
    if (document.contains("output")) c.output_dir = document.at("output").get<std::string>();
    c.output_dir = resolve(c.output_dir, base_dir);
    src["output"] = c.output_dir.string();

    if (document.contains("treatment")) c.treatment = document.at("treatment").get<std::string>();
    if (document.contains("outcome")) c.outcome = document.at("outcome").get<std::string>();
    c.eq1 = string_list(document, "eq1");
    c.eq2 = string_list(document, "eq2");
    c.instruments = string_list(document, "instruments");
    if (document.contains("smooths")) {
      const Json& s = document.at("smooths");
      c.eq1_smooths = smooth_list(s, "eq1");
      c.eq2_smooths = smooth_list(s, "eq2");
    }

    if (document.contains("copula")) c.copula = from_code(document.at("copula").get<std::string>());
    if (document.contains("copulas")) {
      const Json& cs = document.at("copulas");
      if (cs.is_string()) {
        if (cs.get<std::string>() != "all") c.copulas.push_back(from_code(cs.get<std::string>()));
      } else {
        for (const Json& e : cs) c.copulas.push_back(from_code(e.get<std::string>()));
        if (c.copulas.empty()) throw ConfigError("config: 'copulas' is empty");
      }
    }
    if (document.contains("student_df")) {
      c.student_df = document.at("student_df").get<double>();
      if (!(*c.student_df > 0.0)) throw ConfigError("config: 'student_df' must be positive");
    }

    if (document.contains("split")) {
      const Json& s = document.at("split");
      if (s.contains("seed")) c.split_seed = s.at("seed").get<std::uint64_t>();
      if (s.contains("fraction")) c.split_fraction = s.at("fraction").get<double>();
      if (s.contains("group")) c.split_group = s.at("group").get<std::string>();
      if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0))
        throw ConfigError("config: split fraction must lie in (0, 1)");
    }
    if (document.contains("ate")) {
      const Json& a = document.at("ate");
      if (a.contains("n_sims")) c.n_sims = a.at("n_sims").get<int>();
      if (a.contains("alpha")) c.alpha = a.at("alpha").get<double>();
      if (a.contains("seed")) c.ate_seed = a.at("seed").get<std::uint64_t>();
      if (a.contains("treated_only")) c.treated_only = a.at("treated_only").get<bool>();
      if (c.n_sims < 2) throw ConfigError("config: ate n_sims must be at least 2");
      if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("config: ate alpha must lie in (0, 1)");
    }
    if (document.contains("prediction"))
      c.prediction = parse_prediction_mode(document.at("prediction").get<std::string>());
    if (document.contains("simulate")) c.simulate = dgp_from_json(document.at("simulate"));
    c.source = std::move(src);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, std::filesystem::absolute(path).parent_path());
}

}  // namespace copbp
