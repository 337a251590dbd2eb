#include "copjoint/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "copjoint/ad.hpp"

namespace copjoint {

void validate_config(const TrainConfig& cfg) {
  std::ostringstream msg;
  if (cfg.batch_size < 1) {
    msg << "batch_size must be at least 1, got " << cfg.batch_size;
    throw ConfigError(msg.str());
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    msg << "learning_rate must be positive and finite, got " << cfg.learning_rate;
    throw ConfigError(msg.str());
  }
  if (cfg.max_epochs < 1) {
    msg << "max_epochs must be at least 1, got " << cfg.max_epochs;
    throw ConfigError(msg.str());
  }
  if (cfg.patience < 1) {
    msg << "patience must be at least 1, got " << cfg.patience;
    throw ConfigError(msg.str());
  }
  if (!(cfg.min_delta >= 0.0)) {
    msg << "min_delta must be nonnegative, got " << cfg.min_delta;
    throw ConfigError(msg.str());
  }
  if (cfg.depth < 0) {
    msg << "depth must be nonnegative, got " << cfg.depth;
    throw ConfigError(msg.str());
  }
  if (!(cfg.split_ratio > 0.0) || !(cfg.split_ratio < 1.0)) {
    msg << "split_ratio must be inside (0, 1), got " << cfg.split_ratio;
    throw ConfigError(msg.str());
  }
}

ModelSpec normalize_spec(const ModelSpec& spec, const TrainConfig& cfg) {
  ModelSpec out = spec;
  if (out.backbone == Backbone::reslogit) {
    out.block_a.depth = cfg.depth;
    out.block_b.depth = cfg.depth;
  }
  return out;
}

SplitIndices stratified_split(const ModelSpec& spec, const ModelData& data, double ratio,
                              Rng& rng) {
  if (!(ratio > 0.0) || !(ratio < 1.0)) throw ConfigError("split ratio must be inside (0, 1)");
  // strata keyed by joint cell, iterated in cell order for determinism
  std::map<int, std::vector<Eigen::Index>> strata;
  for (Eigen::Index r = 0; r < data.size(); ++r)
    strata[data.ya[r] * spec.block_b.categories + data.yb[r]].push_back(r);

  SplitIndices out;
  for (auto& [cell, rows] : strata) {
    const auto n = static_cast<std::ptrdiff_t>(rows.size());
    if (n == 1) {
      std::ostringstream msg;
      msg << "joint cell (" << (cell / spec.block_b.categories) << ","
          << (cell % spec.block_b.categories)
          << ") has a single observation; keeping it in training";
      out.warnings.push_back(msg.str());
      out.train.push_back(rows.front());
      continue;
    }
    shuffle_indices(rows, rng);
    const auto wanted = static_cast<std::ptrdiff_t>(
        std::llround((1.0 - ratio) * static_cast<double>(n)));
    const std::ptrdiff_t n_val = std::min(n - 1, std::max<std::ptrdiff_t>(1, wanted));
    for (std::ptrdiff_t i = 0; i < n; ++i)
      (i < n_val ? out.val : out.train).push_back(rows[static_cast<std::size_t>(i)]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

namespace {

// add-one-smoothed interior cumulative frequencies mapped through the logit
Eigen::VectorXd empirical_logits(const Eigen::VectorXi& outcomes,
                                 const std::vector<Eigen::Index>& rows, int categories) {
  std::vector<double> counts(static_cast<std::size_t>(categories), 1.0);
  for (const Eigen::Index r : rows) counts[static_cast<std::size_t>(outcomes[r])] += 1.0;
  const double total =
      static_cast<double>(rows.size()) + static_cast<double>(categories);
  Eigen::VectorXd psi(categories - 1);
  double cum = 0.0;
  for (int k = 0; k + 1 < categories; ++k) {
    cum += counts[static_cast<std::size_t>(k)] / total;
    psi[k] = std::log(cum / (1.0 - cum));
  }
  return psi;
}

void init_block(const BlockSpec& blk, Backbone backbone, const std::string& prefix,
                const ParameterLayout& layout, const Eigen::VectorXi& outcomes,
                const std::vector<Eigen::Index>& rows, Eigen::VectorXd& params) {
  if (blk.kind == BlockKind::multinomial) return;  // zero coefficients: uniform modes
  const Eigen::VectorXd psi = empirical_logits(outcomes, rows, blk.categories);
  if (backbone == Backbone::logit) {
    layout_assign(layout, prefix + ".cut", raw_from_thresholds(psi), params);
    return;
  }
  if (layout.has(prefix + ".head"))
    layout_assign(layout, prefix + ".head", Eigen::VectorXd::Ones(blk.features), params);
  // with unit head, zero coefficients and zero stack the score starts at
  // -d*depth*ln2; biases absorb it so the initial marginal matches the data
  const double score0 = -static_cast<double>(blk.features) * blk.depth * std::log(2.0);
  Eigen::VectorXd biases(psi.size());
  for (Eigen::Index k = 0; k < psi.size(); ++k) biases[k] = -score0 - psi[k];
  layout_assign(layout, prefix + ".cut", raw_from_coral_biases(biases), params);
}

}  // namespace

Eigen::VectorXd init_params(const ModelSpec& spec, const ParameterLayout& layout,
                            const ModelData& data, const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) throw DomainError("parameter initialization needs at least one row");
  Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.total);
  init_block(spec.block_a, spec.backbone, "a", layout, data.ya, rows, params);
  init_block(spec.block_b, spec.backbone, "b", layout, data.yb, rows, params);
  return params;
}

double nll_gradient(const ModelSpec& spec, const ParameterLayout& layout,
                    const Eigen::VectorXd& params, const ModelData& data,
                    const std::vector<Eigen::Index>& rows, Eigen::VectorXd& grad) {
  const double value = ad::gradient(
      [&](const VectorX<ad::Var>& p) { return joint_nll(spec, layout, p, data, rows); },
      params, grad);
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream msg;
      msg << "gradient for parameter " << layout.name_of(static_cast<int>(i))
          << " is not finite";
      throw NumericalError(msg.str());
    }
  }
  return value;
}

void Rmsprop::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  s.array() = 0.9 * s.array() + 0.1 * grad.array().square();
  params.array() -= lr * grad.array() / (s.array() + 1e-8).sqrt();
}

std::vector<std::string> boundary_diagnostics(const ModelSpec& spec,
                                              const ParameterLayout& layout,
                                              const Eigen::VectorXd& params) {
  std::vector<std::string> out;
  if (!layout.has("copula.eta")) return out;
  const bool bounded = spec.family == CopulaFamily::gaussian ||
                       spec.family == CopulaFamily::amh || spec.family == CopulaFamily::fgm;
  if (!bounded) return out;
  const Eigen::VectorXd eta = layout_slice(layout, "copula.eta", params);
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    const double theta = std::tanh(eta[j]);
    if (std::abs(theta) > 0.999) {
      std::ostringstream msg;
      msg << "copula parameter " << j << " saturates its range: theta = " << theta;
      out.push_back(msg.str());
    }
  }
  return out;
}

FittedModel train(const ModelSpec& raw_spec, const ModelData& data, const TrainConfig& cfg) {
  validate_config(cfg);
  const ModelSpec spec = normalize_spec(raw_spec, cfg);
  validate_spec(spec);
  validate_model_data(spec, data);

  Rng split_rng = Rng::split(cfg.seed, 1);
  SplitIndices split = stratified_split(spec, data, cfg.split_ratio, split_rng);
  FittedModel fit;
  fit.spec = spec;
  fit.layout = build_layout(spec);
  fit.n_params = fit.layout.total;
  fit.warnings = split.warnings;
  if (split.val.empty()) {
    fit.warnings.push_back("validation split is empty; validating on the training rows");
    split.val = split.train;
  }
  fit.split = split;

  Eigen::VectorXd params = init_params(spec, fit.layout, data, split.train);
  Rmsprop opt(fit.layout.total);
  Rng epoch_rng = Rng::split(cfg.seed, 2);
  std::vector<Eigen::Index> order = split.train;

  Eigen::VectorXd best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  double best_train = 0.0;
  int best_epoch = 0;
  int bad_epochs = 0;
  int last_finite = 0;
  Eigen::VectorXd grad(fit.layout.total);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_indices(order, epoch_rng);
    const std::size_t batch =
        cfg.full_batch ? order.size() : static_cast<std::size_t>(cfg.batch_size);
    try {
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(order.size(), start + batch);
        const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
        nll_gradient(spec, fit.layout, params, data, rows, grad);
        opt.step(params, grad, cfg.learning_rate);
      }
    } catch (const NumericalError& err) {
      std::ostringstream msg;
      msg << "training diverged in epoch " << epoch << ": " << err.what();
      throw TrainingError(msg.str(), last_finite);
    }

    const double train_nll = joint_nll(spec, fit.layout, params, data, split.train);
    const double val_nll = joint_nll(spec, fit.layout, params, data, split.val);
    if (!std::isfinite(train_nll) || !std::isfinite(val_nll)) {
      std::ostringstream msg;
      msg << "loss became non-finite in epoch " << epoch;
      throw TrainingError(msg.str(), last_finite);
    }
    fit.train_trace.push_back(train_nll);
    fit.val_trace.push_back(val_nll);
    fit.epochs = epoch;
    last_finite = epoch;

    const double improvement = best_val - val_nll;
    if (val_nll < best_val) {
      best_val = val_nll;
      best_train = train_nll;
      best_params = params;
      best_epoch = epoch;
    }
    if (improvement > cfg.min_delta) {
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= cfg.patience) break;
  }

  fit.params = best_params;
  fit.best_val_nll = best_val;
  fit.train_nll_at_best = best_train;
  fit.best_epoch = best_epoch;
  const auto boundary = boundary_diagnostics(spec, fit.layout, best_params);
  fit.warnings.insert(fit.warnings.end(), boundary.begin(), boundary.end());
  return fit;
}

SearchResult random_search(const ModelSpec& spec, const ModelData& data,
                           const SearchSpace& space, int budget, const TrainConfig& base) {
  if (budget < 1) throw ConfigError("random search budget must be at least 1");
  if (space.depths.empty() || space.learning_rates.empty() || space.batch_sizes.empty())
    throw ConfigError("random search needs nonempty candidate sets");

  // deterministic enumeration of the whole grid, then a seeded permutation
  std::vector<TrainConfig> combos;
  for (const int depth : space.depths)
    for (const double lr : space.learning_rates)
      for (const int batch : space.batch_sizes) {
        TrainConfig cfg = base;
        cfg.depth = depth;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        combos.push_back(cfg);
      }
  std::vector<std::size_t> perm(combos.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng search_rng = Rng::split(base.seed, 3);
  shuffle_indices(perm, search_rng);

  SearchResult result;
  int best_trial = -1;
  for (int t = 0; t < budget; ++t) {
    const std::size_t pick =
        t < static_cast<int>(perm.size())
            ? perm[static_cast<std::size_t>(t)]
            : static_cast<std::size_t>(search_rng.below(combos.size()));
    SearchTrial trial;
    trial.cfg = combos[pick];
    try {
      FittedModel fitted = train(spec, data, trial.cfg);
      trial.val_nll = fitted.best_val_nll;
      if (best_trial < 0 || trial.val_nll < result.best_model.best_val_nll) {
        best_trial = static_cast<int>(result.trials.size());
        result.best_cfg = trial.cfg;
        result.best_model = std::move(fitted);
      }
    } catch (const TrainingError& err) {
      trial.failed = true;
      trial.error = err.what();
    } catch (const NumericalError& err) {
      trial.failed = true;
      trial.error = err.what();
    }
    result.trials.push_back(std::move(trial));
  }
  if (best_trial < 0)
    throw TrainingError("every random-search trial failed to train", 0);
  return result;
}

}  // namespace copjoint
