#pragma once

// Dataset ingestion, natural-breaks discretization, and synthetic
// joint-choice data generation with known ground-truth dependence.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "copjoint/copula.hpp"
#include "copjoint/model.hpp"
#include "copjoint/rng.hpp"

namespace copjoint {

// columns loaded from a delimited file: a pooled feature matrix addressed by
// name plus two label-mapped outcome columns
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // Q x d
  Eigen::VectorXi outcome_a;
  Eigen::VectorXi outcome_b;
  std::vector<std::string> labels_a;  // index -> original label
  std::vector<std::string> labels_b;
};

struct CsvSchema {
  std::vector<std::string> features;
  std::vector<std::string> indicators;  // subset of features restricted to {0,1}
  std::string outcome_a;
  std::string outcome_b;
};

struct LoadResult {
  Dataset data;
  std::vector<std::string> rejected;  // one entry per skipped row, with location
};

// Reads a comma-separated file with a header row. Structural problems
// (missing file, empty file, absent schema column, no usable rows) throw
// DomainError; malformed rows are skipped and logged. Outcome labels are
// mapped to 0-based indices in sorted order, numeric when every label parses
// as a number, lexicographic otherwise.
LoadResult load_csv(const std::string& path, const CsvSchema& schema);

// column selection by name; outcome indices are copied through
ModelData to_model_data(const Dataset& data, const std::vector<std::string>& features_a,
                        const std::vector<std::string>& features_b);

// one numeric column of a comma-separated file; unparseable values and
// malformed rows raise DomainError with their location
std::vector<double> read_numeric_column(const std::string& path, const std::string& column);

struct JenksResult {
  std::vector<double> thresholds;  // k-1 upper boundaries of the lower classes
  std::vector<Eigen::Index> counts;
  double within_class_ss = 0.0;
};

// Exact dynamic-programming optimum of the within-class sum of squared
// deviations over contiguous classes of the sorted values. Among equal-cost
// partitions the lexicographically smallest break-index vector wins, so the
// result is deterministic.
JenksResult jenks_breaks(const std::vector<double>& values, int k);

// Kendall rank correlation of continuous (tie-free) sample pairs,
// inversion-counted in O(n log n)
double empirical_kendall_tau(const Eigen::MatrixXd& uv);

enum class CovariateScheme {
  independent,        // even columns standard normal, odd columns fair {0,1}
  shared_confounder,  // column 0 shared across blocks; last column is z^2 - 1
};

struct SyntheticTruth {
  ModelSpec spec;
  Eigen::VectorXd params;  // flat vector matching build_layout(spec)
  std::uint64_t seed = 0;
  CovariateScheme scheme = CovariateScheme::independent;
};

struct SimulationResult {
  ModelData data;
  Eigen::MatrixXd latent;  // Q x 2 copula draws for ordinal-ordinal, else 0 x 2
};

// Draws covariates from the documented scheme, then outcomes from the truth
// model: ordinal-ordinal rows map a copula pair (u, v) through both blocks'
// cumulative points; multinomial rows draw the pair from the joint cell
// matrix directly. Row r uses the dedicated stream split(seed, r), so the
// result is reproducible and independent of evaluation order.
SimulationResult simulate(const SyntheticTruth& truth, Eigen::Index q);

// canonical column layout used by the simulator and the file round-trip:
// a_x1..a_xd, b_x1..b_xd, choice_a, choice_b
std::vector<std::string> canonical_feature_names(const ModelSpec& spec);
void write_csv(const std::string& path, const ModelSpec& spec, const ModelData& data);

}  // namespace copjoint
