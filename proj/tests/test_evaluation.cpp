#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "copjoint/common.hpp"
#include "copjoint/evaluation.hpp"

using namespace copjoint;

namespace {

ModelSpec featureless_spec(CopulaFamily family) {
  ModelSpec spec;
  spec.name = "featureless";
  spec.block_a = {"first", BlockKind::ordinal, 2, 0, 0};
  spec.block_b = {"second", BlockKind::ordinal, 2, 0, 0};
  spec.backbone = Backbone::logit;
  spec.family = family;
  return spec;
}

// featureless two-level blocks with chosen marginal cumulative points
Eigen::VectorXd margin_params(const ParameterLayout& layout, double cum_a, double cum_b,
                              double eta = 0.0) {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.total);
  layout_assign(layout, "a.cut",
                Eigen::VectorXd::Constant(1, std::log(cum_a / (1.0 - cum_a))), params);
  layout_assign(layout, "b.cut",
                Eigen::VectorXd::Constant(1, std::log(cum_b / (1.0 - cum_b))), params);
  if (layout.has("copula.eta"))
    layout_assign(layout, "copula.eta", Eigen::VectorXd::Constant(1, eta), params);
  return params;
}

ModelData cell_data(const std::vector<std::pair<int, int>>& obs) {
  ModelData data;
  const Eigen::Index q = static_cast<Eigen::Index>(obs.size());
  data.xa.resize(q, 0);
  data.xb.resize(q, 0);
  data.ya.resize(q);
  data.yb.resize(q);
  for (Eigen::Index r = 0; r < q; ++r) {
    data.ya[r] = obs[static_cast<std::size_t>(r)].first;
    data.yb[r] = obs[static_cast<std::size_t>(r)].second;
  }
  return data;
}

FitReport stub_report(const std::string& name, double loglik, int n_params) {
  FitReport r;
  r.model = name;
  r.family = name;
  r.total_loglik = loglik;
  r.n_params = n_params;
  r.aic = aic(loglik, n_params);
  return r;
}

}  // namespace

TEST_CASE("information criterion arithmetic") {
  CHECK(aic(-785.133, 31) == doctest::Approx(1632.266).epsilon(1e-12));
  CHECK(std::abs(aic(-785.133, 31) - 1632.27) < 0.05);
  CHECK(std::abs(aic(-45614.78, 28) - 91285.56) < 0.05);
  CHECK(aic(0.0, 0) == 0.0);

  // one extra parameter costs exactly 2; better likelihood lowers it
  CHECK(aic(-100.0, 5) - aic(-100.0, 4) == 2.0);
  CHECK(aic(-99.0, 4) < aic(-100.0, 4));
}

TEST_CASE("prediction error counts argmax-cell mismatches") {
  const ModelSpec spec = featureless_spec(CopulaFamily::product);
  const ParameterLayout layout = build_layout(spec);
  // margins 0.7 / 0.7: cells 0.49, 0.21, 0.21, 0.09, argmax (0,0)
  const Eigen::VectorXd params = margin_params(layout, 0.7, 0.7);

  const ModelData all_right = cell_data({{0, 0}, {0, 0}, {0, 0}});
  CHECK(mpe(spec, layout, params, all_right, all_rows(all_right)) == 0.0);

  const ModelData all_wrong = cell_data({{1, 1}, {0, 1}, {1, 0}});
  CHECK(mpe(spec, layout, params, all_wrong, all_rows(all_wrong)) == 1.0);

  const ModelData one_third = cell_data({{0, 0}, {0, 0}, {1, 1}});
  CHECK(mpe(spec, layout, params, one_third, all_rows(one_third)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // uniform cells tie; the lowest index pair (0,0) is the prediction
  const Eigen::VectorXd uniform = margin_params(layout, 0.5, 0.5);
  CHECK(mpe(spec, layout, uniform, all_right, all_rows(all_right)) == 0.0);
  const ModelData off = cell_data({{1, 1}});
  CHECK(mpe(spec, layout, uniform, off, all_rows(off)) == 1.0);
}

TEST_CASE("fitted dependence parameters on the natural scale") {
  const ModelSpec prod = featureless_spec(CopulaFamily::product);
  const ParameterLayout pl = build_layout(prod);
  const Eigen::VectorXd pp = margin_params(pl, 0.5, 0.5);
  const std::vector<double> zero = fitted_thetas(prod, pl, pp);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0] == 0.0);

  const ModelSpec frank = featureless_spec(CopulaFamily::frank);
  const ParameterLayout fl = build_layout(frank);
  const Eigen::VectorXd fp = margin_params(fl, 0.5, 0.5, -0.613);
  const std::vector<double> ft = fitted_thetas(frank, fl, fp);
  REQUIRE(ft.size() == 1);
  CHECK(ft[0] == -0.613);

  // multinomial first block: one theta per mode
  ModelSpec mn;
  mn.name = "modes";
  mn.block_a = {"first", BlockKind::multinomial, 3, 1, 0};
  mn.block_b = {"second", BlockKind::ordinal, 2, 1, 0};
  mn.backbone = Backbone::logit;
  mn.family = CopulaFamily::gaussian;
  const ParameterLayout ml = build_layout(mn);
  Eigen::VectorXd mp = Eigen::VectorXd::Zero(ml.total);
  Eigen::VectorXd eta(3);
  eta << -0.5, 0.0, 1.2;
  layout_assign(ml, "copula.eta", eta, mp);
  const std::vector<double> mt = fitted_thetas(mn, ml, mp);
  REQUIRE(mt.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(mt[static_cast<std::size_t>(j)] == std::tanh(eta[j]));
}

TEST_CASE("fit report fields are consistent") {
  const ModelSpec spec = featureless_spec(CopulaFamily::frank);
  const ParameterLayout layout = build_layout(spec);
  const Eigen::VectorXd params = margin_params(layout, 0.6, 0.4, 1.0);
  const ModelData data = cell_data({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}});

  const FitReport report = evaluate_fit(spec, layout, params, data, all_rows(data));
  CHECK(report.n_obs == 5);
  CHECK(report.n_params == layout.total);
  CHECK(report.aic == aic(report.total_loglik, report.n_params));
  CHECK(report.mpe >= 0.0);
  CHECK(report.mpe <= 1.0);
  CHECK(report.family == "frank");
  REQUIRE(report.thetas.size() == 1);
  CHECK(report.thetas[0] == 1.0);
  CHECK(report.boundary_flags.empty());

  // the total log-likelihood is the sum over rows of the log cell masses
  const double mean_nll = joint_nll(spec, layout, params, data, all_rows(data));
  CHECK(report.total_loglik == doctest::Approx(-5.0 * mean_nll).epsilon(1e-12));

  // saturated bounded dependence raises a boundary flag
  const ModelSpec gauss = featureless_spec(CopulaFamily::gaussian);
  const ParameterLayout gl = build_layout(gauss);
  const Eigen::VectorXd gp = margin_params(gl, 0.6, 0.4, 5.0);
  const FitReport flagged = evaluate_fit(gauss, gl, gp, data, all_rows(data));
  CHECK(!flagged.boundary_flags.empty());
}

TEST_CASE("comparison ranks by information criterion") {
  const FitReport a = stub_report("amh", -785.133, 31);    // aic 1632.266
  const FitReport b = stub_report("product", -505.3, 1);   // aic 1012.6
  const FitReport c = stub_report("frank", -900.0, 2);     // aic 1804

  const auto rows = compare({a, b, c});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].report.model == "product");
  CHECK(rows[1].report.model == "amh");
  CHECK(rows[2].report.model == "frank");
  CHECK(rows[0].best);
  CHECK(!rows[1].best);
  CHECK(!rows[2].best);
  CHECK(rows[0].report.aic <= rows[1].report.aic);
  CHECK(rows[1].report.aic <= rows[2].report.aic);

  // single report is its own best
  const auto lone = compare({a});
  REQUIRE(lone.size() == 1);
  CHECK(lone[0].best);

  // equal AICs keep input order and are both marked best
  const FitReport t1 = stub_report("first", -100.0, 3);
  const FitReport t2 = stub_report("second", -101.0, 2);
  CHECK(t1.aic == t2.aic);
  const auto tied = compare({t1, t2});
  CHECK(tied[0].report.model == "first");
  CHECK(tied[1].report.model == "second");
  CHECK(tied[0].best);
  CHECK(tied[1].best);

  CHECK_THROWS_AS(compare({}), DomainError);
}

TEST_CASE("comparison text is aligned and flags saturation") {
  FitReport a = stub_report("product", -505.3, 1);
  FitReport b = stub_report("gaussian", -500.0, 2);
  b.thetas = {0.9999};
  b.boundary_flags = {"copula.eta[0] saturates the dependence range"};
  const auto rows = compare({a, b});
  const std::string text = comparison_text(rows);
  CHECK(text.find("Model") != std::string::npos);
  CHECK(text.find("AIC") != std::string::npos);
  CHECK(text.find("best") != std::string::npos);
  CHECK(text.find("theta outside range") != std::string::npos);
  // every line of the table has the same width-aligned header columns
  CHECK(text.find("product") != std::string::npos);
  CHECK(text.find("gaussian") != std::string::npos);
}

TEST_CASE("a free dependence parameter never loses in-sample likelihood") {
  // nesting: the best Frank fit is at least as good as the Product fit with
  // the same margins, because theta = 0 reproduces it
  const ModelSpec frank = featureless_spec(CopulaFamily::frank);
  const ParameterLayout layout = build_layout(frank);
  const ModelData data =
      cell_data({{0, 0}, {0, 0}, {0, 0}, {1, 1}, {1, 1}, {0, 1}, {1, 0}, {1, 1}});

  const auto rows = all_rows(data);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double eta = -6.0; eta <= 6.0; eta += 0.05) {
    const Eigen::VectorXd params = margin_params(layout, 0.5, 0.5, eta);
    const double ll = -joint_nll(frank, layout, params, data, rows) * 8.0;
    best_ll = std::max(best_ll, ll);
  }
  const Eigen::VectorXd at_zero = margin_params(layout, 0.5, 0.5, 0.0);
  const double product_ll = -joint_nll(frank, layout, at_zero, data, rows) * 8.0;
  CHECK(best_ll >= product_ll - 1e-6);
  // the data are concordant, so the optimum is strictly better
  CHECK(best_ll > product_ll + 1e-3);
}
