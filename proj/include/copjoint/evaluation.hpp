#pragma once

// Model-selection metrics and multi-model comparison: signed-log-likelihood
// AIC, joint-cell prediction error, fitted dependence parameters, and a
// ranked comparison table.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "copjoint/estimation.hpp"
#include "copjoint/model.hpp"

namespace copjoint {

// -2 LL + 2 B with LL the signed total log-likelihood
double aic(double total_loglik, int n_params);

// share of observations whose argmax joint cell differs from the observed
// pair; ties resolve to the lowest (a, b) index pair
double mpe(const ModelSpec& spec, const ParameterLayout& layout,
           const Eigen::VectorXd& params, const ModelData& data,
           const std::vector<Eigen::Index>& rows);

// dependence parameters on their natural scale: one per mode for a
// multinomial first block, otherwise a single value; Product is 0 exactly
std::vector<double> fitted_thetas(const ModelSpec& spec, const ParameterLayout& layout,
                                  const Eigen::VectorXd& params);

struct FitReport {
  std::string model;
  std::string family;
  std::string backbone;
  int depth = 0;
  double total_loglik = 0.0;
  int n_params = 0;
  double aic = 0.0;
  double mpe = 0.0;
  std::vector<double> thetas;
  std::vector<std::string> boundary_flags;
  Eigen::Index n_obs = 0;
};

// metrics of a parameter vector on the given rows (log-likelihood is the sum
// over rows, not the mean)
FitReport evaluate_fit(const ModelSpec& spec, const ParameterLayout& layout,
                       const Eigen::VectorXd& params, const ModelData& data,
                       const std::vector<Eigen::Index>& rows);

// convenience: metrics of a fitted model on the rows it was trained on are
// produced by the caller passing that split; this overload uses all rows
FitReport evaluate_fit(const FittedModel& fit, const ModelData& data);

struct ComparisonRow {
  FitReport report;
  int input_order = 0;
  bool best = false;
};

// sorted by AIC ascending with stable input-order tie-break; every report
// tied with the lowest AIC is marked best
std::vector<ComparisonRow> compare(const std::vector<FitReport>& reports);

// aligned plain-text table of a comparison
std::string comparison_text(const std::vector<ComparisonRow>& rows);

}  // namespace copjoint
