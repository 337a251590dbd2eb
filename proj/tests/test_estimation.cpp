#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "copjoint/common.hpp"
#include "copjoint/estimation.hpp"
#include "copjoint/rng.hpp"

using namespace copjoint;

namespace {

ModelSpec small_spec(CopulaFamily family, BlockKind kind_a, Backbone backbone, int depth) {
  ModelSpec spec;
  spec.name = "test";
  spec.block_a = {"first", kind_a, 3, 2, depth};
  spec.block_b = {"second", BlockKind::ordinal, 2, 1, depth};
  spec.backbone = backbone;
  spec.family = family;
  return spec;
}

ModelData random_dataset(Rng& rng, const ModelSpec& spec, Eigen::Index q) {
  ModelData data;
  data.xa.resize(q, spec.block_a.features);
  data.xb.resize(q, spec.block_b.features);
  data.ya.resize(q);
  data.yb.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    for (Eigen::Index c = 0; c < data.xa.cols(); ++c) data.xa(r, c) = 2.0 * rng.uniform() - 1.0;
    for (Eigen::Index c = 0; c < data.xb.cols(); ++c) data.xb(r, c) = 2.0 * rng.uniform() - 1.0;
    data.ya[r] = static_cast<int>(rng.uniform() * spec.block_a.categories);
    data.yb[r] = static_cast<int>(rng.uniform() * spec.block_b.categories);
  }
  return data;
}

// featureless two-level blocks whose dependence comes from a copula draw
ModelData dependent_dataset(CopulaFamily family, double theta, Eigen::Index q,
                            std::uint64_t seed) {
  Rng rng(seed);
  const CopulaSpec cop{family, theta};
  ModelData data;
  data.xa.resize(q, 0);
  data.xb.resize(q, 0);
  data.ya.resize(q);
  data.yb.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    const auto [u, v] = sample_pair(cop, rng);
    data.ya[r] = u > 0.5 ? 1 : 0;
    data.yb[r] = v > 0.5 ? 1 : 0;
  }
  return data;
}

ModelSpec featureless_spec(CopulaFamily family) {
  ModelSpec spec;
  spec.name = "featureless";
  spec.block_a = {"first", BlockKind::ordinal, 2, 0, 0};
  spec.block_b = {"second", BlockKind::ordinal, 2, 0, 0};
  spec.backbone = Backbone::logit;
  spec.family = family;
  return spec;
}

}  // namespace

TEST_CASE("rmsprop update rule") {
  Rmsprop opt(1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 1.0);

  opt.step(p, g, 0.1);
  CHECK(opt.s[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(-0.316228).epsilon(1e-5));

  // zero gradient leaves parameters untouched
  Eigen::VectorXd p2 = p;
  opt.step(p2, Eigen::VectorXd::Zero(1), 0.1);
  CHECK(p2[0] == p[0]);

  // with a constant gradient the accumulator grows, so steps shrink
  Rmsprop opt2(1);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(1);
  opt2.step(q, g, 0.1);
  const double first = -q[0];
  const double before = q[0];
  opt2.step(q, g, 0.1);
  const double second = before - q[0];
  CHECK(second > 0.0);
  CHECK(second < first);
}

TEST_CASE("unconstrained copula parameter mapping") {
  CHECK(theta_from_eta(CopulaFamily::gaussian, 0.0) == 0.0);
  CHECK(validate_theta(CopulaFamily::gaussian, 0.0).independence_limit);
  CHECK(theta_from_eta(CopulaFamily::gumbel, -40.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(theta_from_eta(CopulaFamily::frank, -0.613) == -0.613);
  CHECK(theta_from_eta(CopulaFamily::clayton, 2.0) == doctest::Approx(std::log1p(std::exp(2.0))));
}

TEST_CASE("config validation") {
  TrainConfig ok;
  CHECK_NOTHROW(validate_config(ok));
  TrainConfig bad = ok;
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = ok;
  bad.split_ratio = 1.0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = ok;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = ok;
  bad.patience = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  TrainConfig deep;
  deep.depth = 4;
  const ModelSpec spec = small_spec(CopulaFamily::frank, BlockKind::ordinal,
                                    Backbone::reslogit, 0);
  const ModelSpec normalized = normalize_spec(spec, deep);
  CHECK(normalized.block_a.depth == 4);
  CHECK(normalized.block_b.depth == 4);
  const ModelSpec plain = small_spec(CopulaFamily::frank, BlockKind::ordinal,
                                     Backbone::logit, 0);
  CHECK(normalize_spec(plain, deep).block_a.depth == 0);
}

TEST_CASE("stratified split: proportions, determinism, warnings") {
  const ModelSpec spec = featureless_spec(CopulaFamily::product);

  // ten rows in a single joint cell split 7:3
  ModelData data;
  data.xa.resize(10, 0);
  data.xb.resize(10, 0);
  data.ya = Eigen::VectorXi::Zero(10);
  data.yb = Eigen::VectorXi::Zero(10);
  Rng rng(9);
  const SplitIndices split = stratified_split(spec, data, 0.7, rng);
  CHECK(split.train.size() == 7);
  CHECK(split.val.size() == 3);

  // same seed reproduces the same partition
  Rng rng_a(42), rng_b(42);
  const SplitIndices sa = stratified_split(spec, data, 0.7, rng_a);
  const SplitIndices sb = stratified_split(spec, data, 0.7, rng_b);
  CHECK(sa.train == sb.train);
  CHECK(sa.val == sb.val);

  // disjoint and exhaustive with per-stratum balance
  ModelData mixed;
  const Eigen::Index q = 57;
  mixed.xa.resize(q, 0);
  mixed.xb.resize(q, 0);
  mixed.ya.resize(q);
  mixed.yb.resize(q);
  Rng gen(7);
  for (Eigen::Index r = 0; r < q; ++r) {
    mixed.ya[r] = static_cast<int>(gen.uniform() * 2);
    mixed.yb[r] = static_cast<int>(gen.uniform() * 2);
  }
  Rng rng_m(3);
  const SplitIndices sm = stratified_split(spec, mixed, 0.7, rng_m);
  std::set<Eigen::Index> seen;
  for (const auto r : sm.train) seen.insert(r);
  for (const auto r : sm.val) seen.insert(r);
  CHECK(seen.size() == static_cast<std::size_t>(q));
  CHECK(sm.train.size() + sm.val.size() == static_cast<std::size_t>(q));
  for (int cell_a = 0; cell_a < 2; ++cell_a)
    for (int cell_b = 0; cell_b < 2; ++cell_b) {
      Eigen::Index n = 0, n_val = 0;
      for (Eigen::Index r = 0; r < q; ++r)
        if (mixed.ya[r] == cell_a && mixed.yb[r] == cell_b) ++n;
      for (const auto r : sm.val)
        if (mixed.ya[r] == cell_a && mixed.yb[r] == cell_b) ++n_val;
      CHECK(std::abs(static_cast<double>(n_val) - 0.3 * static_cast<double>(n)) <= 1.0);
    }

  // a singleton stratum goes to training and warns
  ModelData lone;
  lone.xa.resize(3, 0);
  lone.xb.resize(3, 0);
  lone.ya.resize(3);
  lone.yb.resize(3);
  lone.ya << 0, 0, 1;
  lone.yb << 0, 0, 1;
  Rng rng_l(1);
  const SplitIndices sl = stratified_split(spec, lone, 0.7, rng_l);
  REQUIRE(sl.warnings.size() == 1);
  CHECK(sl.warnings[0].find("single observation") != std::string::npos);
  CHECK(std::find(sl.train.begin(), sl.train.end(), 2) != sl.train.end());
}

TEST_CASE("initialization matches empirical frequencies") {
  // outcomes: 2 of level 0, 6 of level 1, 4 of level 2 -> smoothed cumulative
  // (2+1)/15, (2+6+2)/15
  ModelSpec spec;
  spec.block_a = {"first", BlockKind::ordinal, 3, 0, 0};
  spec.block_b = {"second", BlockKind::ordinal, 2, 0, 0};
  spec.backbone = Backbone::logit;
  spec.family = CopulaFamily::frank;
  const ParameterLayout layout = build_layout(spec);

  ModelData data;
  const Eigen::Index q = 12;
  data.xa.resize(q, 0);
  data.xb.resize(q, 0);
  data.ya.resize(q);
  data.yb.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    data.ya[r] = r < 2 ? 0 : (r < 8 ? 1 : 2);
    data.yb[r] = r % 2;
  }

  const Eigen::VectorXd params = init_params(spec, layout, data, all_rows(data));
  const Eigen::VectorXd psi =
      thresholds_from_raw(Eigen::VectorXd(layout_slice(layout, "a.cut", params)));
  const double f1 = 3.0 / 15.0, f2 = 10.0 / 15.0;
  CHECK(psi[0] == doctest::Approx(std::log(f1 / (1.0 - f1))).epsilon(1e-12));
  CHECK(psi[1] == doctest::Approx(std::log(f2 / (1.0 - f2))).epsilon(1e-12));
  CHECK(layout_slice(layout, "copula.eta", params)[0] == 0.0);

  // the deep backbone starts with unit heads and bias-absorbed frequencies
  ModelSpec deep = small_spec(CopulaFamily::frank, BlockKind::ordinal, Backbone::reslogit, 2);
  const ParameterLayout dl = build_layout(deep);
  Rng rng(17);
  const ModelData rd = random_dataset(rng, deep, 20);
  const Eigen::VectorXd dp = init_params(deep, dl, rd, all_rows(rd));
  const Eigen::VectorXd head = layout_slice(dl, "a.head", dp);
  for (Eigen::Index i = 0; i < head.size(); ++i) CHECK(head[i] == 1.0);

  // initial cumulative points reproduce the smoothed frequencies exactly
  const Eigen::VectorXd xa = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd cum = block_cumulative(deep.block_a, deep.backbone, "a", dl, dp, xa);
  std::vector<double> counts(3, 1.0);
  for (Eigen::Index r = 0; r < rd.size(); ++r) counts[static_cast<std::size_t>(rd.ya[r])] += 1.0;
  const double total = 20.0 + 3.0;
  CHECK(cum[1] == doctest::Approx(counts[0] / total).epsilon(1e-12));
  CHECK(cum[2] == doctest::Approx((counts[0] + counts[1]) / total).epsilon(1e-12));
}

TEST_CASE("gradient matches finite differences for every family, shape, and depth") {
  const CopulaFamily families[] = {CopulaFamily::product, CopulaFamily::gaussian,
                                   CopulaFamily::frank,   CopulaFamily::clayton,
                                   CopulaFamily::gumbel,  CopulaFamily::joe,
                                   CopulaFamily::amh,     CopulaFamily::fgm};
  Rng rng(211);
  for (const auto family : families) {
    for (const auto kind : {BlockKind::ordinal, BlockKind::multinomial}) {
      for (const int depth : {0, 1, 2}) {
        const Backbone backbone = depth == 0 ? Backbone::logit : Backbone::reslogit;
        const ModelSpec spec = small_spec(family, kind, backbone, depth);
        const ParameterLayout layout = build_layout(spec);
        Eigen::VectorXd params(layout.total);
        for (int i = 0; i < layout.total; ++i) params[i] = 0.5 * (2.0 * rng.uniform() - 1.0);
        const ModelData data = random_dataset(rng, spec, 8);
        const auto rows = all_rows(data);

        Eigen::VectorXd grad(layout.total);
        const double value = nll_gradient(spec, layout, params, data, rows, grad);
        CHECK(std::isfinite(value));

        for (int i = 0; i < layout.total; ++i) {
          const double step = 1e-5;
          Eigen::VectorXd pp = params, pm = params;
          pp[i] += step;
          pm[i] -= step;
          const double up = joint_nll(spec, layout, Eigen::VectorXd(pp), data, rows);
          const double dn = joint_nll(spec, layout, Eigen::VectorXd(pm), data, rows);
          const double fd = (up - dn) / (2.0 * step);
          CHECK(std::abs(grad[i] - fd) <= 1e-7 + 1e-4 * std::abs(fd));
        }
      }
    }
  }
}

TEST_CASE("non-finite gradient names the parameter") {
  // at theta = 1 exactly the gaussian copula derivative degenerates while the
  // likelihood itself stays finite
  const ModelSpec spec = featureless_spec(CopulaFamily::gaussian);
  const ParameterLayout layout = build_layout(spec);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.total);
  layout_assign(layout, "copula.eta", Eigen::VectorXd::Constant(1, 20.0), params);
  CHECK(std::tanh(20.0) == 1.0);

  ModelData data;
  data.xa.resize(1, 0);
  data.xb.resize(1, 0);
  data.ya = Eigen::VectorXi::Zero(1);
  data.yb = Eigen::VectorXi::Zero(1);

  Eigen::VectorXd grad;
  CHECK_THROWS_WITH_AS(
      nll_gradient(spec, layout, params, data, all_rows(data), grad),
      doctest::Contains("gradient for parameter"), NumericalError);
}

TEST_CASE("training is deterministic and checkpoints the best validation epoch") {
  const ModelData data = dependent_dataset(CopulaFamily::frank, 3.0, 400, 1234);
  const ModelSpec spec = featureless_spec(CopulaFamily::frank);

  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 30;
  cfg.patience = 8;
  cfg.seed = 7;

  const FittedModel fit_a = train(spec, data, cfg);
  const FittedModel fit_b = train(spec, data, cfg);

  REQUIRE(fit_a.epochs == fit_b.epochs);
  for (int e = 0; e < fit_a.epochs; ++e) {
    CHECK(fit_a.train_trace[static_cast<std::size_t>(e)] ==
          fit_b.train_trace[static_cast<std::size_t>(e)]);
    CHECK(fit_a.val_trace[static_cast<std::size_t>(e)] ==
          fit_b.val_trace[static_cast<std::size_t>(e)]);
  }
  for (Eigen::Index i = 0; i < fit_a.params.size(); ++i)
    CHECK(fit_a.params[i] == fit_b.params[i]);

  CHECK(fit_a.n_params == fit_a.layout.total);
  CHECK(fit_a.epochs <= cfg.max_epochs);
  CHECK(static_cast<int>(fit_a.val_trace.size()) == fit_a.epochs);
  CHECK(fit_a.best_val_nll ==
        *std::min_element(fit_a.val_trace.begin(), fit_a.val_trace.end()));
  CHECK(fit_a.val_trace[static_cast<std::size_t>(fit_a.best_epoch - 1)] == fit_a.best_val_nll);

  // the returned parameters reproduce the reported validation NLL on the
  // reproducible split
  Rng split_rng = Rng::split(cfg.seed, 1);
  const SplitIndices split = stratified_split(fit_a.spec, data, cfg.split_ratio, split_rng);
  CHECK(fit_a.split.train == split.train);
  CHECK(fit_a.split.val == split.val);
  const double recomputed = joint_nll(fit_a.spec, fit_a.layout, fit_a.params, data, split.val);
  CHECK(recomputed == doctest::Approx(fit_a.best_val_nll).epsilon(1e-12));

  // the fitted dependence parameter has the right sign and rough size
  const Eigen::VectorXd eta = layout_slice(fit_a.layout, "copula.eta", fit_a.params);
  const double theta = theta_from_eta(CopulaFamily::frank, eta[0]);
  CHECK(theta > 0.5);
}

TEST_CASE("early stopping halts before max_epochs on an easy problem") {
  const ModelData data = dependent_dataset(CopulaFamily::product, 0.0, 300, 55);
  const ModelSpec spec = featureless_spec(CopulaFamily::product);

  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 500;
  cfg.patience = 5;
  cfg.seed = 3;

  const FittedModel fit = train(spec, data, cfg);
  CHECK(fit.epochs < cfg.max_epochs);
  CHECK(fit.best_val_nll == *std::min_element(fit.val_trace.begin(), fit.val_trace.end()));
}

TEST_CASE("divergence raises a training error with the last finite epoch") {
  // perfectly concordant outcomes push the gaussian parameter to saturation;
  // at tanh == 1 the gradient degenerates
  ModelData data;
  const Eigen::Index q = 64;
  data.xa.resize(q, 0);
  data.xb.resize(q, 0);
  data.ya.resize(q);
  data.yb.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    data.ya[r] = static_cast<int>(r % 2);
    data.yb[r] = static_cast<int>(r % 2);
  }
  const ModelSpec spec = featureless_spec(CopulaFamily::gaussian);

  // the first full-batch step has magnitude ~3.16 * lr, enough to land the
  // unconstrained parameter where tanh rounds to exactly 1
  TrainConfig cfg;
  cfg.full_batch = true;
  cfg.learning_rate = 7.0;
  cfg.max_epochs = 50;
  cfg.seed = 11;

  bool threw = false;
  try {
    train(spec, data, cfg);
  } catch (const TrainingError& err) {
    threw = true;
    CHECK(err.last_finite_epoch >= 1);
    CHECK(err.last_finite_epoch <= 5);
    CHECK(std::string(err.what()).find("diverged") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("random search picks the better configuration") {
  const ModelData data = dependent_dataset(CopulaFamily::frank, 2.0, 300, 99);
  const ModelSpec spec = featureless_spec(CopulaFamily::frank);

  TrainConfig base;
  base.max_epochs = 20;
  base.patience = 6;
  base.seed = 21;

  // budget 1 on a single-point space is exactly train()
  SearchSpace single;
  single.depths = {0};
  single.learning_rates = {0.05};
  single.batch_sizes = {64};
  const SearchResult one = random_search(spec, data, single, 1, base);
  TrainConfig direct_cfg = base;
  direct_cfg.depth = 0;
  direct_cfg.learning_rate = 0.05;
  direct_cfg.batch_size = 64;
  const FittedModel direct = train(spec, data, direct_cfg);
  CHECK(one.trials.size() == 1);
  CHECK(one.best_model.best_val_nll == direct.best_val_nll);
  for (Eigen::Index i = 0; i < direct.params.size(); ++i)
    CHECK(one.best_model.params[i] == direct.params[i]);

  // a pathological learning rate loses to the sane one
  SearchSpace two;
  two.depths = {0};
  two.learning_rates = {0.05, 10.0};
  two.batch_sizes = {64};
  const SearchResult duel = random_search(spec, data, two, 2, base);
  CHECK(duel.trials.size() == 2);
  CHECK(duel.best_cfg.learning_rate == 0.05);

  // fixed seed: identical trial sequence across runs
  const SearchResult again = random_search(spec, data, two, 2, base);
  REQUIRE(again.trials.size() == duel.trials.size());
  for (std::size_t t = 0; t < duel.trials.size(); ++t) {
    CHECK(again.trials[t].cfg.learning_rate == duel.trials[t].cfg.learning_rate);
    CHECK(again.trials[t].failed == duel.trials[t].failed);
    if (!duel.trials[t].failed) CHECK(again.trials[t].val_nll == duel.trials[t].val_nll);
  }

  CHECK_THROWS_AS(random_search(spec, data, two, 0, base), ConfigError);
  SearchSpace empty;
  CHECK_THROWS_AS(random_search(spec, data, empty, 1, base), ConfigError);
}
