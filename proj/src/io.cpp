#include "copjoint/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "copjoint/copula.hpp"

namespace copjoint {

namespace {

template <class... Parts>
std::string describe(const Parts&... parts) {
  std::ostringstream msg;
  (msg << ... << parts);
  return msg.str();
}

const ordered_json& need(const ordered_json& j, const std::string& key,
                         const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(describe("missing field '", key, "' in ", where));
  return *it;
}

template <class T>
T get_as(const ordered_json& j, const std::string& key, const std::string& where) {
  try {
    return need(j, key, where).get<T>();
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(describe("field '", key, "' in ", where, ": ", err.what()));
  }
}

template <class T>
T get_or(const ordered_json& j, const std::string& key, const std::string& where,
         const T& fallback) {
  if (j.find(key) == j.end()) return fallback;
  return get_as<T>(j, key, where);
}

BlockKind kind_from_string(const std::string& text, const std::string& where) {
  if (text == "ordinal") return BlockKind::ordinal;
  if (text == "multinomial") return BlockKind::multinomial;
  throw ConfigError(describe("unknown block kind '", text, "' in ", where,
                             "; use 'ordinal' or 'multinomial'"));
}

Backbone backbone_from_string(const std::string& text, const std::string& where) {
  if (text == "logit") return Backbone::logit;
  if (text == "reslogit") return Backbone::reslogit;
  throw ConfigError(describe("unknown backbone '", text, "' in ", where,
                             "; use 'logit' or 'reslogit'"));
}

const char* scheme_name(CovariateScheme scheme) {
  return scheme == CovariateScheme::independent ? "independent" : "shared_confounder";
}

CovariateScheme scheme_from_string(const std::string& text, const std::string& where) {
  if (text == "independent") return CovariateScheme::independent;
  if (text == "shared_confounder") return CovariateScheme::shared_confounder;
  throw ConfigError(describe("unknown covariate scheme '", text, "' in ", where,
                             "; use 'independent' or 'shared_confounder'"));
}

std::vector<std::string> columns_from_json(const ordered_json& j, const std::string& role,
                                           const std::string& where) {
  // either an explicit column-name array or a count of canonical columns
  if (j.is_number_integer()) {
    const int n = j.get<int>();
    if (n < 0) throw ConfigError(describe("negative feature count in ", where));
    std::vector<std::string> names;
    for (int c = 0; c < n; ++c)
      names.push_back(role + "_x" + std::to_string(c + 1));
    return names;
  }
  try {
    return j.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(describe("field 'features' in ", where, ": ", err.what()));
  }
}

BlockConfig block_from_json(const ordered_json& j, const std::string& role) {
  const std::string where = "block_" + role;
  BlockConfig block;
  block.name = get_or<std::string>(j, "name", where, role);
  block.kind = kind_from_string(get_or<std::string>(j, "kind", where, "ordinal"), where);
  block.categories = get_as<int>(j, "categories", where);
  if (j.find("features") != j.end())
    block.columns = columns_from_json(j.at("features"), role, where);
  block.depth = get_or<int>(j, "depth", where, 0);
  return block;
}

ordered_json block_to_json(const BlockConfig& block) {
  ordered_json j;
  j["name"] = block.name;
  j["kind"] = block.kind == BlockKind::ordinal ? "ordinal" : "multinomial";
  j["categories"] = block.categories;
  j["features"] = block.columns;
  j["depth"] = block.depth;
  return j;
}

}  // namespace

std::vector<CopulaFamily> families_of(const ModelConfig& config) {
  if (config.family == "all")
    return {kAllFamilies.begin(), kAllFamilies.end()};

  std::vector<CopulaFamily> families;
  std::istringstream tokens(config.family);
  std::string token;
  while (std::getline(tokens, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    token = token.substr(first, token.find_last_not_of(" \t") - first + 1);
    const auto family = parse_family(token);
    if (!family) {
      std::ostringstream msg;
      msg << "unknown copula family '" << token << "'; legal names:";
      for (const auto f : kAllFamilies) msg << ' ' << family_name(f);
      msg << ", or 'all'";
      throw UsageError(msg.str());
    }
    if (std::find(families.begin(), families.end(), *family) == families.end())
      families.push_back(*family);
  }
  if (families.empty())
    throw UsageError(describe("config selects no copula family ('", config.family, "')"));
  return families;
}

ModelSpec make_spec(const ModelConfig& config, CopulaFamily family) {
  ModelSpec spec;
  spec.name = config.name;
  spec.block_a = {config.block_a.name, config.block_a.kind, config.block_a.categories,
                  static_cast<int>(config.block_a.columns.size()), config.block_a.depth};
  spec.block_b = {config.block_b.name, config.block_b.kind, config.block_b.categories,
                  static_cast<int>(config.block_b.columns.size()), config.block_b.depth};
  spec.backbone = config.backbone;
  spec.family = family;
  return spec;
}

ModelConfig model_from_json(const ordered_json& j) {
  ModelConfig config;
  config.name = get_or<std::string>(j, "name", "model", "model");
  config.family = get_or<std::string>(j, "family", "model", "product");
  config.backbone =
      backbone_from_string(get_or<std::string>(j, "backbone", "model", "logit"), "model");
  config.block_a = block_from_json(need(j, "block_a", "model"), "a");
  config.block_b = block_from_json(need(j, "block_b", "model"), "b");
  return config;
}

ordered_json model_to_json(const ModelConfig& config) {
  ordered_json j;
  j["name"] = config.name;
  j["family"] = config.family;
  j["backbone"] = config.backbone == Backbone::logit ? "logit" : "reslogit";
  j["block_a"] = block_to_json(config.block_a);
  j["block_b"] = block_to_json(config.block_b);
  return j;
}

RunConfig run_config_from_json(const ordered_json& j) {
  RunConfig run;
  run.data_path = get_or<std::string>(j, "data", "config", "");
  run.out_dir = get_or<std::string>(j, "out", "config", ".");
  run.seed = get_or<std::uint64_t>(j, "seed", "config", 0);
  if (j.find("model") != j.end()) run.model = model_from_json(j.at("model"));
  run.indicators = get_or<std::vector<std::string>>(j, "indicators", "config", {});
  if (j.find("outcomes") != j.end()) {
    const ordered_json& o = j.at("outcomes");
    run.outcome_a = get_or<std::string>(o, "a", "outcomes", run.outcome_a);
    run.outcome_b = get_or<std::string>(o, "b", "outcomes", run.outcome_b);
  }

  if (j.find("train") != j.end()) {
    const ordered_json& t = j.at("train");
    run.train.batch_size = get_or<int>(t, "batch_size", "train", run.train.batch_size);
    run.train.learning_rate =
        get_or<double>(t, "learning_rate", "train", run.train.learning_rate);
    run.train.max_epochs = get_or<int>(t, "max_epochs", "train", run.train.max_epochs);
    run.train.patience = get_or<int>(t, "patience", "train", run.train.patience);
    run.train.min_delta = get_or<double>(t, "min_delta", "train", run.train.min_delta);
    run.train.depth = get_or<int>(t, "depth", "train", run.train.depth);
    run.train.split_ratio = get_or<double>(t, "split_ratio", "train", run.train.split_ratio);
    run.train.full_batch = get_or<bool>(t, "full_batch", "train", run.train.full_batch);
  }

  if (j.find("tune") != j.end()) {
    const ordered_json& t = j.at("tune");
    TuneConfig tune;
    tune.space.depths = get_or<std::vector<int>>(t, "depths", "tune", {});
    tune.space.learning_rates = get_or<std::vector<double>>(t, "learning_rates", "tune", {});
    tune.space.batch_sizes = get_or<std::vector<int>>(t, "batch_sizes", "tune", {});
    tune.budget = get_as<int>(t, "budget", "tune");
    run.tune = tune;
  }

  if (j.find("simulate") != j.end()) {
    const ordered_json& s = j.at("simulate");
    run.sim_q = get_as<Eigen::Index>(s, "q", "simulate");
    run.sim_scheme =
        scheme_from_string(get_or<std::string>(s, "scheme", "simulate", "independent"),
                           "simulate");
    if (s.find("params") != s.end()) {
      const ordered_json& p = s.at("params");
      if (!p.is_object()) throw ConfigError("simulate.params must be an object");
      for (const auto& [key, value] : p.items()) {
        try {
          run.sim_params[key] = value.get<std::vector<double>>();
        } catch (const nlohmann::json::exception& err) {
          throw ConfigError(describe("simulate.params['", key, "']: ", err.what()));
        }
      }
    }
    if (s.find("theta") != s.end()) run.sim_theta = get_as<double>(s, "theta", "simulate");
  }

  if (j.find("eval") != j.end())
    run.eval_params_path = get_as<std::string>(j.at("eval"), "params", "eval");

  if (j.find("compare") != j.end())
    run.compare_reports =
        get_as<std::vector<std::string>>(j.at("compare"), "reports", "compare");

  if (j.find("breaks") != j.end()) {
    const ordered_json& b = j.at("breaks");
    run.breaks_column = get_as<std::string>(b, "column", "breaks");
    run.breaks_k = get_as<int>(b, "k", "breaks");
  }
  return run;
}

ordered_json params_to_json(const ModelSpec& spec, const ModelConfig& config,
                            const ParameterLayout& layout, const Eigen::VectorXd& params) {
  ModelConfig single = config;
  single.family = family_name(spec.family);
  ordered_json j;
  j["model"] = model_to_json(single);
  ordered_json values;
  for (const auto& entry : layout.entries) {
    std::vector<double> slice(static_cast<std::size_t>(entry.size));
    for (int i = 0; i < entry.size; ++i)
      slice[static_cast<std::size_t>(i)] = params[entry.offset + i];
    values[entry.name] = slice;
  }
  j["values"] = values;
  return j;
}

Eigen::VectorXd params_from_json(const ordered_json& j, const ParameterLayout& layout) {
  const ordered_json& values = need(j, "values", "parameter file");
  if (!values.is_object()) throw ConfigError("'values' must be an object");
  Eigen::VectorXd params(layout.total);
  std::size_t used = 0;
  for (const auto& entry : layout.entries) {
    const auto it = values.find(entry.name);
    if (it == values.end())
      throw ConfigError(describe("parameter file lacks entry '", entry.name,
                                 "' required by the model layout"));
    std::vector<double> slice;
    try {
      slice = it->get<std::vector<double>>();
    } catch (const nlohmann::json::exception& err) {
      throw ConfigError(describe("parameter entry '", entry.name, "': ", err.what()));
    }
    if (slice.size() != static_cast<std::size_t>(entry.size))
      throw ConfigError(describe("parameter entry '", entry.name, "' has length ",
                                 slice.size(), ", the layout needs ", entry.size));
    for (int i = 0; i < entry.size; ++i)
      params[entry.offset + i] = slice[static_cast<std::size_t>(i)];
    ++used;
  }
  if (used != values.size())
    throw ConfigError(describe("parameter file has ", values.size(),
                               " entries, the layout needs ", used));
  return params;
}

ordered_json report_to_json(const FitReport& report) {
  ordered_json j;
  j["model"] = report.model;
  j["family"] = report.family;
  j["backbone"] = report.backbone;
  j["depth"] = report.depth;
  j["total_loglik"] = report.total_loglik;
  j["n_params"] = report.n_params;
  j["aic"] = report.aic;
  j["mpe"] = report.mpe;
  j["thetas"] = report.thetas;
  j["boundary_flags"] = report.boundary_flags;
  j["n_obs"] = static_cast<std::int64_t>(report.n_obs);
  return j;
}

FitReport report_from_json(const ordered_json& j) {
  FitReport report;
  report.model = get_as<std::string>(j, "model", "report");
  report.family = get_as<std::string>(j, "family", "report");
  report.backbone = get_or<std::string>(j, "backbone", "report", "logit");
  report.depth = get_or<int>(j, "depth", "report", 0);
  report.total_loglik = get_as<double>(j, "total_loglik", "report");
  report.n_params = get_as<int>(j, "n_params", "report");
  report.aic = get_as<double>(j, "aic", "report");
  report.mpe = get_as<double>(j, "mpe", "report");
  report.thetas = get_or<std::vector<double>>(j, "thetas", "report", {});
  report.boundary_flags = get_or<std::vector<std::string>>(j, "boundary_flags", "report", {});
  report.n_obs = get_or<std::int64_t>(j, "n_obs", "report", 0);
  return report;
}

ordered_json trace_to_json(const FittedModel& fit) {
  ordered_json j;
  j["epochs"] = fit.epochs;
  j["best_epoch"] = fit.best_epoch;
  j["best_val_nll"] = fit.best_val_nll;
  j["train_nll_at_best"] = fit.train_nll_at_best;
  j["train"] = fit.train_trace;
  j["val"] = fit.val_trace;
  j["warnings"] = fit.warnings;
  return j;
}

ordered_json split_to_json(const SplitIndices& split) {
  ordered_json j;
  std::vector<std::int64_t> train(split.train.begin(), split.train.end());
  std::vector<std::int64_t> val(split.val.begin(), split.val.end());
  j["train"] = train;
  j["val"] = val;
  j["warnings"] = split.warnings;
  return j;
}

ordered_json truth_to_json(const ModelConfig& config, const SyntheticTruth& truth) {
  ModelConfig single = config;
  single.family = family_name(truth.spec.family);
  const ParameterLayout layout = build_layout(truth.spec);
  ordered_json j;
  j["model"] = model_to_json(single);
  j["seed"] = truth.seed;
  j["scheme"] = scheme_name(truth.scheme);
  ordered_json values;
  for (const auto& entry : layout.entries) {
    std::vector<double> slice(static_cast<std::size_t>(entry.size));
    for (int i = 0; i < entry.size; ++i)
      slice[static_cast<std::size_t>(i)] = truth.params[entry.offset + i];
    values[entry.name] = slice;
  }
  j["params"] = values;
  return j;
}

SyntheticTruth truth_from_json(const ordered_json& j) {
  const ModelConfig config = model_from_json(need(j, "model", "truth file"));
  const std::vector<CopulaFamily> families = families_of(config);
  if (families.size() != 1)
    throw ConfigError("a truth file needs a single copula family, not 'all'");
  SyntheticTruth truth;
  truth.spec = make_spec(config, families[0]);
  truth.seed = get_as<std::uint64_t>(j, "seed", "truth file");
  truth.scheme =
      scheme_from_string(get_or<std::string>(j, "scheme", "truth file", "independent"),
                         "truth file");
  const ParameterLayout layout = build_layout(truth.spec);
  ordered_json wrapped;
  wrapped["values"] = need(j, "params", "truth file");
  truth.params = params_from_json(wrapped, layout);
  return truth;
}

ordered_json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  ordered_json ranking = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r = report_to_json(row.report);
    r["best"] = row.best;
    ranking.push_back(r);
  }
  ordered_json j;
  j["ranking"] = ranking;
  return j;
}

ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(describe("cannot open '", path, "'"));
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw DomainError(describe("'", path, "': ", err.what()));
  }
}

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError(describe("cannot open '", path, "' for writing"));
  out << j.dump(2) << '\n';
  if (!out) throw DomainError(describe("failed writing '", path, "'"));
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DomainError(describe("cannot open '", path, "' for writing"));
  out << text;
  if (!out) throw DomainError(describe("failed writing '", path, "'"));
}

}  // namespace copjoint
