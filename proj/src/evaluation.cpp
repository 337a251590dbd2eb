#include "copjoint/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "copjoint/copula.hpp"

namespace copjoint {

double aic(double total_loglik, int n_params) {
  return -2.0 * total_loglik + 2.0 * static_cast<double>(n_params);
}

double mpe(const ModelSpec& spec, const ParameterLayout& layout,
           const Eigen::VectorXd& params, const ModelData& data,
           const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) throw DomainError("mpe needs at least one observation");
  Eigen::Index wrong = 0;
  for (const auto q : rows) {
    const Eigen::VectorXd xa = model_detail::feature_row<double>(data.xa, q);
    const Eigen::VectorXd xb = model_detail::feature_row<double>(data.xb, q);
    const Eigen::MatrixXd cells = joint_cells(spec, layout, params, xa, xb);
    // lowest index pair wins ties: scan in (a, b) order, strict improvement
    Eigen::Index best_a = 0, best_b = 0;
    double best_mass = cells(0, 0);
    for (Eigen::Index a = 0; a < cells.rows(); ++a)
      for (Eigen::Index b = 0; b < cells.cols(); ++b)
        if (cells(a, b) > best_mass) {
          best_mass = cells(a, b);
          best_a = a;
          best_b = b;
        }
    if (best_a != data.ya[q] || best_b != data.yb[q]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

std::vector<double> fitted_thetas(const ModelSpec& spec, const ParameterLayout& layout,
                                  const Eigen::VectorXd& params) {
  const Eigen::Index n =
      spec.block_a.kind == BlockKind::multinomial ? spec.block_a.categories : 1;
  std::vector<double> thetas(static_cast<std::size_t>(n), 0.0);
  if (!family_has_theta(spec.family)) return thetas;
  const Eigen::VectorXd eta = layout_slice(layout, "copula.eta", params);
  for (Eigen::Index j = 0; j < n; ++j)
    thetas[static_cast<std::size_t>(j)] = theta_from_eta(spec.family, eta[j]);
  return thetas;
}

FitReport evaluate_fit(const ModelSpec& spec, const ParameterLayout& layout,
                       const Eigen::VectorXd& params, const ModelData& data,
                       const std::vector<Eigen::Index>& rows) {
  FitReport report;
  report.model = spec.name;
  report.family = family_name(spec.family);
  report.backbone = backbone_name(spec.backbone);
  report.depth = spec.block_a.depth;
  report.n_obs = static_cast<Eigen::Index>(rows.size());
  report.total_loglik =
      -joint_nll(spec, layout, params, data, rows) * static_cast<double>(rows.size());
  report.n_params = layout.total;
  report.aic = aic(report.total_loglik, report.n_params);
  report.mpe = mpe(spec, layout, params, data, rows);
  report.thetas = fitted_thetas(spec, layout, params);
  report.boundary_flags = boundary_diagnostics(spec, layout, params);
  return report;
}

FitReport evaluate_fit(const FittedModel& fit, const ModelData& data) {
  return evaluate_fit(fit.spec, fit.layout, fit.params, data, all_rows(data));
}

std::vector<ComparisonRow> compare(const std::vector<FitReport>& reports) {
  if (reports.empty()) throw DomainError("compare needs at least one report");
  std::vector<ComparisonRow> rows(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    rows[i].report = reports[i];
    rows[i].input_order = static_cast<int>(i);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     return a.report.aic < b.report.aic;
                   });
  const double best_aic = rows.front().report.aic;
  for (auto& row : rows) row.best = row.report.aic == best_aic;
  return rows;
}

namespace {

std::string theta_text(const FitReport& r) {
  std::ostringstream out;
  out << std::setprecision(4);
  for (std::size_t i = 0; i < r.thetas.size(); ++i) {
    if (i > 0) out << ", ";
    out << r.thetas[i];
  }
  return out.str();
}

}  // namespace

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  const std::vector<std::string> headers = {"Model",  "Family", "LL",   "Parameters",
                                            "AIC",    "MPE",    "theta", "Notes"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(headers);
  for (const auto& row : rows) {
    const FitReport& r = row.report;
    std::ostringstream ll, aic_s, mpe_s;
    ll << std::fixed << std::setprecision(3) << r.total_loglik;
    aic_s << std::fixed << std::setprecision(3) << r.aic;
    mpe_s << std::fixed << std::setprecision(4) << r.mpe;
    std::string notes = row.best ? "best" : "";
    if (!r.boundary_flags.empty()) {
      if (!notes.empty()) notes += "; ";
      notes += "theta outside range";
    }
    cells.push_back({r.model, r.family, ll.str(), std::to_string(r.n_params), aic_s.str(),
                     mpe_s.str(), theta_text(r), notes});
  }

  std::vector<std::size_t> width(headers.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c)
      width[c] = std::max(width[c], line[c].size());

  std::ostringstream out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (std::size_t c = 0; c < cells[l].size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << cells[l][c];
      if (c + 1 < cells[l].size()) out << "  ";
    }
    out << '\n';
    if (l == 0) {
      for (std::size_t c = 0; c < width.size(); ++c) {
        out << std::string(width[c], '-');
        if (c + 1 < width.size()) out << "  ";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace copjoint
