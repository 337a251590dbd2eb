#pragma once

// Config and artifact serialization: run configuration parsing, parameter
// and report files, traces, and synthetic-truth files. All writers use
// insertion-ordered keys and locale-free number formatting, so a rerun with
// the same inputs reproduces every output byte.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "copjoint/data.hpp"
#include "copjoint/estimation.hpp"
#include "copjoint/evaluation.hpp"
#include "copjoint/model.hpp"

namespace copjoint {

using ordered_json = nlohmann::ordered_json;

// block description as configured: feature columns by name
struct BlockConfig {
  std::string name;
  BlockKind kind = BlockKind::ordinal;
  int categories = 2;
  std::vector<std::string> columns;
  int depth = 0;
};

struct ModelConfig {
  std::string name = "model";
  std::string family = "product";  // a name, comma-separated names, or "all"
  Backbone backbone = Backbone::logit;
  BlockConfig block_a;
  BlockConfig block_b;
};

struct TuneConfig {
  SearchSpace space;
  int budget = 0;
};

struct RunConfig {
  std::string data_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::optional<ModelConfig> model;
  std::vector<std::string> indicators;
  std::string outcome_a = "choice_a";
  std::string outcome_b = "choice_b";
  TrainConfig train;
  std::optional<TuneConfig> tune;
  // simulate
  Eigen::Index sim_q = 0;
  CovariateScheme sim_scheme = CovariateScheme::independent;
  std::map<std::string, std::vector<double>> sim_params;
  std::optional<double> sim_theta;
  // eval
  std::string eval_params_path;
  // compare
  std::vector<std::string> compare_reports;
  // breaks
  std::string breaks_column;
  int breaks_k = 0;
};

// the copula families a config selects: one name, a comma-separated list in
// the given order (duplicates dropped), or all of them for "all"; unknown
// names raise UsageError listing the legal ones
std::vector<CopulaFamily> families_of(const ModelConfig& config);

ModelSpec make_spec(const ModelConfig& config, CopulaFamily family);

RunConfig run_config_from_json(const ordered_json& j);

ordered_json model_to_json(const ModelConfig& config);
ModelConfig model_from_json(const ordered_json& j);

// flat parameter vector keyed by layout entry names
ordered_json params_to_json(const ModelSpec& spec, const ModelConfig& config,
                            const ParameterLayout& layout, const Eigen::VectorXd& params);
// rebuilds the vector against the given layout; name or length mismatches
// raise ConfigError
Eigen::VectorXd params_from_json(const ordered_json& j, const ParameterLayout& layout);

ordered_json report_to_json(const FitReport& report);
FitReport report_from_json(const ordered_json& j);

ordered_json trace_to_json(const FittedModel& fit);
ordered_json split_to_json(const SplitIndices& split);

ordered_json truth_to_json(const ModelConfig& config, const SyntheticTruth& truth);
SyntheticTruth truth_from_json(const ordered_json& j);

ordered_json comparison_to_json(const std::vector<ComparisonRow>& rows);

ordered_json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const ordered_json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace copjoint
