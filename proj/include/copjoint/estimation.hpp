#pragma once

// Maximum-likelihood fitting: parameter initialization, reverse-mode
// gradients of the joint NLL, RMSprop mini-batch SGD with early stopping on
// a stratified validation split, and random-search hyperparameter tuning.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "copjoint/model.hpp"
#include "copjoint/rng.hpp"

namespace copjoint {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 10;        // epochs without improvement before stopping
  double min_delta = 1e-6;  // improvement below this does not reset patience
  int depth = 16;           // residual layers per block under the deep backbone
  std::uint64_t seed = 0;
  double split_ratio = 0.7;  // training share of the data
  bool full_batch = false;   // one batch per epoch (useful for small models)
};

// throws ConfigError on out-of-range settings
void validate_config(const TrainConfig& cfg);

// applies cfg.depth to both blocks under the deep backbone
ModelSpec normalize_spec(const ModelSpec& spec, const TrainConfig& cfg);

struct SplitIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> val;
  std::vector<std::string> warnings;
};

// Stratified by joint outcome cell: each stratum contributes
// min(n-1, max(1, round((1-ratio)*n))) validation rows, so proportions are
// preserved within one observation per stratum and singleton strata stay in
// training (with a warning).
SplitIndices stratified_split(const ModelSpec& spec, const ModelData& data, double ratio,
                              Rng& rng);

// Zeros everywhere except: head weights start at one (a zero head would
// silence the coefficient gradients) and threshold/bias raws reproduce the
// add-one-smoothed empirical level frequencies of the given rows, so the
// initial marginals match the data under zero coefficients.
Eigen::VectorXd init_params(const ModelSpec& spec, const ParameterLayout& layout,
                            const ModelData& data, const std::vector<Eigen::Index>& rows);

// Mean NLL over `rows` and its reverse-mode gradient. A non-finite loss or
// gradient component raises NumericalError naming the parameter slice.
double nll_gradient(const ModelSpec& spec, const ParameterLayout& layout,
                    const Eigen::VectorXd& params, const ModelData& data,
                    const std::vector<Eigen::Index>& rows, Eigen::VectorXd& grad);

// RMSprop accumulator; call step once per mini-batch.
struct Rmsprop {
  explicit Rmsprop(Eigen::Index n) : s(Eigen::VectorXd::Zero(n)) {}
  Eigen::VectorXd s;

  // s <- 0.9 s + 0.1 g^2;  p <- p - lr * g / sqrt(s + 1e-8)
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
};

struct FittedModel {
  ModelSpec spec;  // normalized (depth applied)
  ParameterLayout layout;
  Eigen::VectorXd params;  // at the best validation NLL
  std::vector<double> train_trace;
  std::vector<double> val_trace;
  int epochs = 0;      // epochs actually run
  int best_epoch = 0;  // 1-based epoch of the returned parameters
  double best_val_nll = 0.0;
  double train_nll_at_best = 0.0;
  int n_params = 0;  // flat layout length, the B of the fit report
  SplitIndices split;
  std::vector<std::string> warnings;
};

// theta components saturating a bounded range (|tanh(eta)| > 0.999)
std::vector<std::string> boundary_diagnostics(const ModelSpec& spec,
                                              const ParameterLayout& layout,
                                              const Eigen::VectorXd& params);

// Mini-batch RMSprop with early stopping: shuffles with cfg.seed, splits by
// cfg.split_ratio, evaluates validation NLL each epoch, stops after
// cfg.patience epochs without improvement > cfg.min_delta, and returns the
// parameters of the best validation epoch. Divergence raises TrainingError
// carrying the last epoch that evaluated finite.
FittedModel train(const ModelSpec& spec, const ModelData& data, const TrainConfig& cfg);

struct SearchSpace {
  std::vector<int> depths;
  std::vector<double> learning_rates;
  std::vector<int> batch_sizes;
};

struct SearchTrial {
  TrainConfig cfg;
  double val_nll = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  TrainConfig best_cfg;
  FittedModel best_model;
  std::vector<SearchTrial> trials;
};

// Samples `budget` configurations uniformly without replacement while the
// space lasts (with replacement beyond that), trains each with the same data
// seed, and returns the best by validation NLL. Failed trials are recorded,
// not fatal; every trial failing is a TrainingError.
SearchResult random_search(const ModelSpec& spec, const ModelData& data,
                           const SearchSpace& space, int budget, const TrainConfig& base);

}  // namespace copjoint
