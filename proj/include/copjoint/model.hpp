#pragma once

// Joint-choice model assembly: block and model specifications, the flat
// parameter layout used by the optimizer, per-observation joint cell
// matrices for ordinal-ordinal and multinomial-ordinal shapes, and the mean
// negative log-likelihood. Cell construction is templated on the scalar so
// the optimizer can differentiate through it.

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "copjoint/common.hpp"
#include "copjoint/copula.hpp"
#include "copjoint/marginals.hpp"

namespace copjoint {

enum class BlockKind { ordinal, multinomial };

// logit: ordered logit (ordinal) / plain multinomial logit; reslogit adds a
// residual utility stack and, for ordinal blocks, a rank-consistent head.
enum class Backbone { logit, reslogit };

const char* block_kind_name(BlockKind k);
const char* backbone_name(Backbone b);

struct BlockSpec {
  std::string name;
  BlockKind kind = BlockKind::ordinal;
  int categories = 2;  // K levels (ordinal) or J alternatives (multinomial)
  int features = 0;    // block feature count d
  int depth = 0;       // residual layers M; must be 0 under the logit backbone
};

struct ModelSpec {
  std::string name;
  BlockSpec block_a;  // ordinal or multinomial
  BlockSpec block_b;  // always ordinal
  Backbone backbone = Backbone::logit;
  CopulaFamily family = CopulaFamily::product;
};

// throws ConfigError when the specification is internally inconsistent
void validate_spec(const ModelSpec& spec);

// Named slices of the flat parameter vector. Slice names are "<prefix>.coef",
// "<prefix>.head", "<prefix>.cut", "<prefix>.stack" with prefix "a"/"b", plus
// "copula.eta" for non-product families (length 1, or J for a multinomial
// first block). Zero-length slices are omitted.
struct LayoutEntry {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct ParameterLayout {
  std::vector<LayoutEntry> entries;
  int total = 0;

  bool has(const std::string& name) const;
  const LayoutEntry& entry(const std::string& name) const;  // DomainError if absent
  int offset_of(const std::string& name) const { return entry(name).offset; }
  int size_of(const std::string& name) const;  // 0 if absent
  std::string name_of(int flat_index) const;   // e.g. "a.coef[3]"
};

ParameterLayout build_layout(const ModelSpec& spec);

// copy one named slice out of the flat vector (empty if absent)
template <class S>
VectorX<S> layout_slice(const ParameterLayout& layout, const std::string& name,
                        const VectorX<S>& params) {
  const int n = layout.size_of(name);
  VectorX<S> out(n);
  if (n == 0) return out;
  const int off = layout.offset_of(name);
  for (int i = 0; i < n; ++i) out[i] = params[off + i];
  return out;
}

// write one named slice into the flat vector
void layout_assign(const ParameterLayout& layout, const std::string& name,
                   const Eigen::VectorXd& value, Eigen::VectorXd& params);

namespace model_detail {

// slice laid out row-major as rows x cols
template <class S>
MatrixX<S> matrix_slice(const ParameterLayout& layout, const std::string& name,
                        const VectorX<S>& params, int rows, int cols) {
  MatrixX<S> m(rows, cols);
  if (rows * cols == 0) return m;
  const int off = layout.offset_of(name);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = params[off + r * cols + c];
  return m;
}

// residual stack of `depth` square d x d matrices, flattened row-major
template <class S>
std::vector<MatrixX<S>> stack_slice(const ParameterLayout& layout, const std::string& name,
                                    const VectorX<S>& params, int depth, int d) {
  std::vector<MatrixX<S>> stack;
  stack.reserve(static_cast<std::size_t>(depth));
  if (depth == 0) return stack;
  int off = layout.offset_of(name);
  for (int m = 0; m < depth; ++m) {
    MatrixX<S> w(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) w(r, c) = params[off + r * d + c];
    stack.push_back(std::move(w));
    off += d * d;
  }
  return stack;
}

}  // namespace model_detail

// Cumulative points (length K+1) of an ordinal block at features x.
template <class S>
VectorX<S> block_cumulative(const BlockSpec& blk, Backbone backbone, const std::string& prefix,
                            const ParameterLayout& layout, const VectorX<S>& params,
                            const VectorX<S>& x) {
  if (x.size() != blk.features) {
    std::ostringstream msg;
    msg << "block '" << blk.name << "' expects " << blk.features << " features, got " << x.size();
    throw DomainError(msg.str());
  }
  const VectorX<S> raw_cut = layout_slice(layout, prefix + ".cut", params);
  if (backbone == Backbone::logit) {
    const VectorX<S> gamma = layout_slice(layout, prefix + ".coef", params);
    S gz(0);
    for (Eigen::Index i = 0; i < x.size(); ++i) gz += gamma[i] * x[i];
    return ordered_logit_cumulative(gz, thresholds_from_raw(raw_cut));
  }
  const VectorX<S> beta = layout_slice(layout, prefix + ".coef", params);
  const VectorX<S> head = layout_slice(layout, prefix + ".head", params);
  const auto stack =
      model_detail::stack_slice(layout, prefix + ".stack", params, blk.depth, blk.features);
  VectorX<S> h0(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) h0[i] = beta[i] * x[i];
  const VectorX<S> rep = residual_forward(stack, h0);
  S score(0);
  for (Eigen::Index i = 0; i < rep.size(); ++i) score += head[i] * rep[i];
  return coral_cumulative(score, coral_biases_from_raw(raw_cut));
}

// Choice probabilities (length J) of a multinomial block at features x.
template <class S>
VectorX<S> block_mode_probs(const BlockSpec& blk, Backbone backbone, const std::string& prefix,
                            const ParameterLayout& layout, const VectorX<S>& params,
                            const VectorX<S>& x) {
  if (x.size() != blk.features) {
    std::ostringstream msg;
    msg << "block '" << blk.name << "' expects " << blk.features << " features, got " << x.size();
    throw DomainError(msg.str());
  }
  const MatrixX<S> coef = model_detail::matrix_slice(layout, prefix + ".coef", params,
                                                     blk.categories - 1, blk.features);
  std::vector<MatrixX<S>> stack;
  if (backbone == Backbone::reslogit)
    stack = model_detail::stack_slice(layout, prefix + ".stack", params, blk.depth,
                                      blk.categories);
  return softmax(mnl_utilities(coef, x, stack));
}

// Joint cell matrix for two ordinal margins: the copula rectangle mass of
// each cumulative cell. Negative mass beyond -1e-10 is a consistency error;
// smaller negatives (rounding) clamp to zero.
template <class S>
MatrixX<S> ordinal_ordinal_cells(const VectorX<S>& u_cum, const VectorX<S>& v_cum,
                                 CopulaFamily family, const S& theta) {
  const Eigen::Index ka = u_cum.size() - 1;
  const Eigen::Index kb = v_cum.size() - 1;
  MatrixX<S> grid(ka + 1, kb + 1);
  for (Eigen::Index i = 0; i <= ka; ++i)
    for (Eigen::Index k = 0; k <= kb; ++k)
      grid(i, k) = copula_cdf(family, theta, u_cum[i], v_cum[k]);
  MatrixX<S> cells(ka, kb);
  for (Eigen::Index i = 0; i < ka; ++i) {
    for (Eigen::Index k = 0; k < kb; ++k) {
      S mass = grid(i + 1, k + 1) - grid(i, k + 1) - grid(i + 1, k) + grid(i, k);
      const double mv = scalar_value(mass);
      if (mv < -1e-10) {
        std::ostringstream msg;
        msg << "joint cell (" << i << "," << k << ") has mass " << mv;
        throw NumericalError(msg.str());
      }
      cells(i, k) = mv < 0.0 ? S(0) : mass;
    }
  }
  return cells;
}

// Joint cell matrix for a multinomial first margin: couple each mode's
// probability with the ordinal cumulative through a per-mode theta, then
// renormalize so the matrix is a distribution.
template <class S>
MatrixX<S> multinomial_ordinal_cells(const VectorX<S>& mode_probs, const VectorX<S>& v_cum,
                                     CopulaFamily family, const VectorX<S>& thetas) {
  const Eigen::Index j_modes = mode_probs.size();
  const Eigen::Index kb = v_cum.size() - 1;
  if (family_has_theta(family) && thetas.size() != j_modes)
    throw DomainError("multinomial joint needs one copula parameter per mode");
  MatrixX<S> cells(j_modes, kb);
  S total(0);
  for (Eigen::Index j = 0; j < j_modes; ++j) {
    const S theta = family_has_theta(family) ? thetas[j] : S(0);
    S prev = copula_cdf(family, theta, mode_probs[j], v_cum[0]);
    for (Eigen::Index r = 0; r < kb; ++r) {
      const S next = copula_cdf(family, theta, mode_probs[j], v_cum[r + 1]);
      S mass = next - prev;
      prev = next;
      const double mv = scalar_value(mass);
      if (mv < -1e-10) {
        std::ostringstream msg;
        msg << "joint cell (" << j << "," << r << ") has mass " << mv;
        throw NumericalError(msg.str());
      }
      cells(j, r) = mv < 0.0 ? S(0) : mass;
      total += cells(j, r);
    }
  }
  for (Eigen::Index j = 0; j < j_modes; ++j)
    for (Eigen::Index r = 0; r < kb; ++r) cells(j, r) = cells(j, r) / total;
  return cells;
}

// Per-observation joint cell matrix for the full model.
template <class S>
MatrixX<S> joint_cells(const ModelSpec& spec, const ParameterLayout& layout,
                       const VectorX<S>& params, const VectorX<S>& xa, const VectorX<S>& xb) {
  const VectorX<S> v_cum =
      block_cumulative(spec.block_b, spec.backbone, "b", layout, params, xb);
  const VectorX<S> eta = layout_slice(layout, "copula.eta", params);
  if (spec.block_a.kind == BlockKind::ordinal) {
    const VectorX<S> u_cum =
        block_cumulative(spec.block_a, spec.backbone, "a", layout, params, xa);
    const S theta =
        family_has_theta(spec.family) ? theta_from_eta(spec.family, eta[0]) : S(0);
    return ordinal_ordinal_cells(u_cum, v_cum, spec.family, theta);
  }
  const VectorX<S> mode_probs =
      block_mode_probs(spec.block_a, spec.backbone, "a", layout, params, xa);
  VectorX<S> thetas(eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j)
    thetas[j] = theta_from_eta(spec.family, eta[j]);
  return multinomial_ordinal_cells(mode_probs, v_cum, spec.family, thetas);
}

// Estimation-ready view of a dataset: per-block feature matrices plus
// outcome indices.
struct ModelData {
  Eigen::MatrixXd xa;  // Q x d_a
  Eigen::MatrixXd xb;  // Q x d_b
  Eigen::VectorXi ya;  // first-block outcome, 0-based
  Eigen::VectorXi yb;  // second-block outcome, 0-based

  Eigen::Index size() const { return ya.size(); }
};

// throws DomainError when shapes or outcome ranges disagree with the spec
void validate_model_data(const ModelSpec& spec, const ModelData& data);

namespace model_detail {

template <class S>
VectorX<S> feature_row(const Eigen::MatrixXd& x, Eigen::Index row) {
  VectorX<S> out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out[i] = S(x(row, i));
  return out;
}

}  // namespace model_detail

// Mean negative log-likelihood over the given rows (all rows when `rows` is
// empty is an error; pass the full index list). Cells are floored at 1e-12
// before the logarithm.
template <class S>
S joint_nll(const ModelSpec& spec, const ParameterLayout& layout, const VectorX<S>& params,
            const ModelData& data, const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) throw DomainError("joint_nll needs at least one observation");
  using std::log;
  S acc(0);
  for (const Eigen::Index q : rows) {
    const VectorX<S> xa = model_detail::feature_row<S>(data.xa, q);
    const VectorX<S> xb = model_detail::feature_row<S>(data.xb, q);
    const MatrixX<S> cells = joint_cells(spec, layout, params, xa, xb);
    const S cell = cells(data.ya[q], data.yb[q]);
    if (scalar_value(cell) > 1e-12) {
      acc -= log(cell);
    } else {
      acc -= S(std::log(1e-12));
    }
  }
  return acc / S(static_cast<double>(rows.size()));
}

std::vector<Eigen::Index> all_rows(const ModelData& data);

}  // namespace copjoint
