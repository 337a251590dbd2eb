#include "copjoint/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "copjoint/copula.hpp"
#include "copjoint/data.hpp"
#include "copjoint/estimation.hpp"
#include "copjoint/evaluation.hpp"
#include "copjoint/io.hpp"

namespace copjoint {

namespace {

RunConfig load_run_config(const CliOptions& opts) {
  if (opts.config_path.empty()) throw UsageError("a --config file is required");
  RunConfig run = run_config_from_json(read_json_file(opts.config_path));
  if (opts.seed) run.seed = *opts.seed;
  if (opts.out_dir) run.out_dir = *opts.out_dir;
  run.train.seed = run.seed;
  std::filesystem::create_directories(run.out_dir);
  return run;
}

std::string out_path(const RunConfig& run, const std::string& file) {
  return (std::filesystem::path(run.out_dir) / file).string();
}

const ModelConfig& need_model(const RunConfig& run) {
  if (!run.model) throw ConfigError("this command needs a 'model' section in the config");
  return *run.model;
}

CopulaFamily single_family(const ModelConfig& config, const std::string& command) {
  const std::vector<CopulaFamily> families = families_of(config);
  if (families.size() != 1)
    throw ConfigError(command + " needs a single copula family, not 'all'");
  return families[0];
}

// columns of both blocks, deduplicated, in first-appearance order
CsvSchema fit_schema(const RunConfig& run, const ModelConfig& config) {
  CsvSchema schema;
  for (const auto& name : config.block_a.columns)
    if (std::find(schema.features.begin(), schema.features.end(), name) ==
        schema.features.end())
      schema.features.push_back(name);
  for (const auto& name : config.block_b.columns)
    if (std::find(schema.features.begin(), schema.features.end(), name) ==
        schema.features.end())
      schema.features.push_back(name);
  schema.indicators = run.indicators;
  schema.outcome_a = run.outcome_a;
  schema.outcome_b = run.outcome_b;
  return schema;
}

ordered_json load_report_json(const LoadResult& loaded) {
  ordered_json j;
  j["rows_loaded"] = loaded.data.features.rows();
  j["rejected"] = loaded.rejected;
  j["labels_a"] = loaded.data.labels_a;
  j["labels_b"] = loaded.data.labels_b;
  return j;
}

ModelData load_model_data(const RunConfig& run, const ModelConfig& config,
                          std::ostream& out) {
  if (run.data_path.empty()) throw ConfigError("this command needs a 'data' file path");
  const LoadResult loaded = load_csv(run.data_path, fit_schema(run, config));
  write_json_file(out_path(run, "load_report.json"), load_report_json(loaded));
  out << "loaded " << loaded.data.features.rows() << " rows from " << run.data_path;
  if (!loaded.rejected.empty()) out << " (" << loaded.rejected.size() << " rejected)";
  out << "\n";
  return to_model_data(loaded.data, config.block_a.columns, config.block_b.columns);
}

void cmd_simulate(const RunConfig& run, std::ostream& out) {
  const ModelConfig& config = need_model(run);
  if (run.sim_q < 1) throw ConfigError("simulate needs 'simulate.q' >= 1");

  SyntheticTruth truth;
  truth.spec = make_spec(config, single_family(config, "simulate"));
  validate_spec(truth.spec);
  truth.seed = run.seed;
  truth.scheme = run.sim_scheme;
  const ParameterLayout layout = build_layout(truth.spec);
  truth.params = Eigen::VectorXd::Zero(layout.total);
  for (const auto& [name, values] : run.sim_params) {
    const Eigen::VectorXd slice =
        Eigen::Map<const Eigen::VectorXd>(values.data(),
                                          static_cast<Eigen::Index>(values.size()));
    layout_assign(layout, name, slice, truth.params);
  }
  if (run.sim_theta) {
    const double theta = *run.sim_theta;
    if (!family_has_theta(truth.spec.family)) {
      if (theta != 0.0)
        throw ConfigError("the product family has no dependence parameter to set");
    } else {
      require_valid({truth.spec.family, theta});
      const double eta = eta_from_theta(truth.spec.family, theta);
      layout_assign(layout, "copula.eta",
                    Eigen::VectorXd::Constant(layout.size_of("copula.eta"), eta),
                    truth.params);
    }
  }

  const SimulationResult sim = simulate(truth, run.sim_q);
  write_csv(out_path(run, "dataset.csv"), truth.spec, sim.data);
  write_json_file(out_path(run, "truth.json"), truth_to_json(config, truth));
  out << "simulated " << run.sim_q << " rows (family " << family_name(truth.spec.family)
      << ", seed " << run.seed << ")\n";
  out << "wrote " << out_path(run, "dataset.csv") << " and " << out_path(run, "truth.json")
      << "\n";
}

void cmd_fit(const RunConfig& run, std::ostream& out) {
  const ModelConfig& config = need_model(run);
  const std::vector<CopulaFamily> families = families_of(config);
  const ModelData data = load_model_data(run, config, out);

  std::vector<FitReport> reports;
  bool split_written = false;
  for (const CopulaFamily family : families) {
    const ModelSpec spec = make_spec(config, family);
    FittedModel fit;
    if (run.tune) {
      const SearchResult search =
          random_search(spec, data, run.tune->space, run.tune->budget, run.train);
      fit = search.best_model;
      ordered_json trials = ordered_json::array();
      for (const auto& trial : search.trials) {
        ordered_json t;
        t["depth"] = trial.cfg.depth;
        t["learning_rate"] = trial.cfg.learning_rate;
        t["batch_size"] = trial.cfg.batch_size;
        t["failed"] = trial.failed;
        if (trial.failed)
          t["error"] = trial.error;
        else
          t["val_nll"] = trial.val_nll;
        trials.push_back(t);
      }
      ordered_json tune_report;
      tune_report["trials"] = trials;
      write_json_file(
          out_path(run, std::string("tuning_") + family_name(family) + ".json"),
          tune_report);
    } else {
      fit = train(spec, data, run.train);
    }

    const FitReport report =
        evaluate_fit(fit.spec, fit.layout, fit.params, data, fit.split.train);
    const std::string suffix = std::string(family_name(family)) + ".json";
    write_json_file(out_path(run, "report_" + suffix),
                    report_to_json(report));
    write_json_file(out_path(run, "params_" + suffix),
                    params_to_json(fit.spec, config, fit.layout, fit.params));
    write_json_file(out_path(run, "trace_" + suffix), trace_to_json(fit));
    if (!split_written) {
      write_json_file(out_path(run, "split.json"), split_to_json(fit.split));
      split_written = true;
    }
    out << "fitted " << family_name(family) << ": train LL "
        << std::fixed << std::setprecision(3) << report.total_loglik << ", AIC "
        << report.aic << ", " << fit.epochs << " epochs\n"
        << std::defaultfloat << std::setprecision(6);
    reports.push_back(report);
  }

  if (reports.size() > 1) {
    const std::vector<ComparisonRow> rows = compare(reports);
    write_json_file(out_path(run, "comparison.json"), comparison_to_json(rows));
    const std::string text = comparison_text(rows);
    write_text_file(out_path(run, "comparison.txt"), text);
    out << text;
  }
}

void cmd_eval(const RunConfig& run, std::ostream& out) {
  const ModelConfig& config = need_model(run);
  if (run.eval_params_path.empty())
    throw ConfigError("eval needs 'eval.params' pointing at a parameter file");
  const ModelSpec spec = make_spec(config, single_family(config, "eval"));
  validate_spec(spec);
  const ParameterLayout layout = build_layout(spec);
  const Eigen::VectorXd params =
      params_from_json(read_json_file(run.eval_params_path), layout);
  const ModelData data = load_model_data(run, config, out);
  const FitReport report = evaluate_fit(spec, layout, params, data, all_rows(data));
  write_json_file(out_path(run, "eval_report.json"), report_to_json(report));
  out << "evaluated " << report.family << " on " << report.n_obs << " rows: LL "
      << std::fixed << std::setprecision(3) << report.total_loglik << ", AIC " << report.aic
      << ", MPE " << std::setprecision(4) << report.mpe << "\n"
      << std::defaultfloat << std::setprecision(6);
}

void cmd_compare(const RunConfig& run, std::ostream& out) {
  if (run.compare_reports.empty())
    throw ConfigError("compare needs 'compare.reports' with at least one report file");
  std::vector<FitReport> reports;
  for (const auto& path : run.compare_reports)
    reports.push_back(report_from_json(read_json_file(path)));
  const std::vector<ComparisonRow> rows = compare(reports);
  write_json_file(out_path(run, "comparison.json"), comparison_to_json(rows));
  const std::string text = comparison_text(rows);
  write_text_file(out_path(run, "comparison.txt"), text);
  out << text;
}

void cmd_breaks(const RunConfig& run, std::ostream& out) {
  if (run.data_path.empty()) throw ConfigError("breaks needs a 'data' file path");
  if (run.breaks_column.empty())
    throw ConfigError("breaks needs 'breaks.column' naming a numeric column");
  const std::vector<double> values = read_numeric_column(run.data_path, run.breaks_column);
  const JenksResult result = jenks_breaks(values, run.breaks_k);

  ordered_json j;
  j["column"] = run.breaks_column;
  j["k"] = run.breaks_k;
  j["thresholds"] = result.thresholds;
  std::vector<std::int64_t> counts(result.counts.begin(), result.counts.end());
  j["counts"] = counts;
  j["within_class_ss"] = result.within_class_ss;
  write_json_file(out_path(run, "breaks.json"), j);

  out << "column " << run.breaks_column << ", k=" << run.breaks_k << ": thresholds";
  for (const double t : result.thresholds) out << ' ' << t;
  out << ", counts";
  for (const auto c : counts) out << ' ' << c;
  out << "\n";
}

}  // namespace

void run_command(const CliOptions& opts, std::ostream& out) {
  const RunConfig run = load_run_config(opts);
  if (opts.command == "simulate") return cmd_simulate(run, out);
  if (opts.command == "fit") return cmd_fit(run, out);
  if (opts.command == "eval") return cmd_eval(run, out);
  if (opts.command == "compare") return cmd_compare(run, out);
  if (opts.command == "breaks") return cmd_breaks(run, out);
  throw UsageError("unknown command '" + opts.command +
                   "'; use fit, simulate, eval, compare, or breaks");
}

}  // namespace copjoint
