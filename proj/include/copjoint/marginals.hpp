#pragma once

// Marginal model building blocks: ordered-logit thresholds, rank-consistent
// ordinal heads, multinomial utilities, and the softplus residual stack.
// Everything is templated on the scalar type so the same expressions evaluate
// on plain doubles and on reverse-mode ad::Var without duplication.

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <vector>

#include "copjoint/common.hpp"
#include "copjoint/math.hpp"

namespace copjoint {

template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Ordered-logit thresholds from an unconstrained raw vector:
//   psi_1 = raw_1, psi_k = psi_{k-1} + exp(raw_k),
// so psi is strictly increasing for any finite raw.
template <class S>
VectorX<S> thresholds_from_raw(const VectorX<S>& raw) {
  using std::exp;
  VectorX<S> psi(raw.size());
  if (raw.size() == 0) return psi;
  psi[0] = raw[0];
  for (Eigen::Index k = 1; k < raw.size(); ++k) psi[k] = psi[k - 1] + exp(raw[k]);
  return psi;
}

// Inverse of thresholds_from_raw; psi must be strictly increasing.
inline Eigen::VectorXd raw_from_thresholds(const Eigen::VectorXd& psi) {
  Eigen::VectorXd raw(psi.size());
  if (psi.size() == 0) return raw;
  raw[0] = psi[0];
  for (Eigen::Index k = 1; k < psi.size(); ++k) {
    const double gap = psi[k] - psi[k - 1];
    if (!(gap > 0.0)) {
      std::ostringstream msg;
      msg << "thresholds must be strictly increasing; gap " << k << " is " << gap;
      throw DomainError(msg.str());
    }
    raw[k] = std::log(gap);
  }
  return raw;
}

// Ordinal-head biases from an unconstrained raw vector:
//   b_1 = raw_1, b_k = b_{k-1} - exp(raw_k),
// strictly decreasing, which makes the per-level binary probabilities
// monotone by construction.
template <class S>
VectorX<S> coral_biases_from_raw(const VectorX<S>& raw) {
  using std::exp;
  VectorX<S> b(raw.size());
  if (raw.size() == 0) return b;
  b[0] = raw[0];
  for (Eigen::Index k = 1; k < raw.size(); ++k) b[k] = b[k - 1] - exp(raw[k]);
  return b;
}

// Inverse of coral_biases_from_raw; b must be strictly decreasing.
inline Eigen::VectorXd raw_from_coral_biases(const Eigen::VectorXd& b) {
  Eigen::VectorXd raw(b.size());
  if (b.size() == 0) return raw;
  raw[0] = b[0];
  for (Eigen::Index k = 1; k < b.size(); ++k) {
    const double drop = b[k - 1] - b[k];
    if (!(drop > 0.0)) {
      std::ostringstream msg;
      msg << "ordinal-head biases must be strictly decreasing; drop " << k << " is " << drop;
      throw DomainError(msg.str());
    }
    raw[k] = std::log(drop);
  }
  return raw;
}

// Residual utility stack: h_m = h_{m-1} - softplus(W_m h_{m-1}) componentwise.
// An empty stack is the identity. Each W_m must be square of h0's dimension.
template <class S>
VectorX<S> residual_forward(const std::vector<MatrixX<S>>& weights, const VectorX<S>& h0) {
  VectorX<S> h = h0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    const MatrixX<S>& w = weights[m];
    if (w.rows() != h.size() || w.cols() != h.size()) {
      std::ostringstream msg;
      msg << "residual layer " << (m + 1) << " has shape " << w.rows() << "x" << w.cols()
          << " but the state vector has dimension " << h.size();
      throw DomainError(msg.str());
    }
    VectorX<S> z = w * h;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      h[i] = h[i] - softplus(z[i]);
      if (!std::isfinite(scalar_value(h[i]))) {
        std::ostringstream msg;
        msg << "residual layer " << (m + 1) << " produced a non-finite value at component " << i;
        throw NumericalError(msg.str());
      }
    }
  }
  return h;
}

// Multinomial utilities with the first alternative as the zero reference:
// coef is (J-1) x d, x is length d, and the J-vector (0, coef*x) is passed
// through the residual stack (dimension J).
template <class S>
VectorX<S> mnl_utilities(const MatrixX<S>& coef, const VectorX<S>& x,
                         const std::vector<MatrixX<S>>& stack) {
  if (coef.cols() != x.size()) {
    std::ostringstream msg;
    msg << "utility coefficients expect " << coef.cols() << " features, got " << x.size();
    throw DomainError(msg.str());
  }
  VectorX<S> v(coef.rows() + 1);
  v[0] = S(0);
  for (Eigen::Index j = 0; j < coef.rows(); ++j) {
    S acc(0);
    for (Eigen::Index i = 0; i < coef.cols(); ++i) acc += coef(j, i) * x[i];
    v[j + 1] = acc;
  }
  return residual_forward(stack, v);
}

// Max-subtracted softmax; components in (0,1), sum 1 up to rounding.
template <class S>
VectorX<S> softmax(const VectorX<S>& v) {
  using std::exp;
  using std::max;
  if (v.size() == 0) throw DomainError("softmax needs a nonempty vector");
  S m = v[0];
  for (Eigen::Index i = 1; i < v.size(); ++i) m = max(m, v[i]);
  VectorX<S> p(v.size());
  S total(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p[i] = exp(v[i] - m);
    total += p[i];
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) p[i] = p[i] / total;
  return p;
}

// Per-level binary classifier probabilities p_k = logistic(score + b_k),
// strictly decreasing in k because the biases are.
template <class S>
VectorX<S> coral_binary_probs(const S& score, const VectorX<S>& biases) {
  VectorX<S> p(biases.size());
  for (Eigen::Index k = 0; k < biases.size(); ++k) p[k] = logistic(score + biases[k]);
  return p;
}

// Level masses from decreasing binary probabilities:
//   level_1 = 1 - p_1, level_k = p_{k-1} - p_k, level_K = p_{K-1}.
template <class S>
VectorX<S> ordinal_level_probs(const VectorX<S>& binary_probs) {
  const Eigen::Index km1 = binary_probs.size();
  if (km1 == 0) throw DomainError("ordinal levels need at least one binary probability");
  for (Eigen::Index k = 1; k < km1; ++k) {
    if (scalar_value(binary_probs[k]) > scalar_value(binary_probs[k - 1])) {
      std::ostringstream msg;
      msg << "binary probabilities must be nonincreasing; p[" << k << "] > p[" << (k - 1) << "]";
      throw DomainError(msg.str());
    }
  }
  VectorX<S> level(km1 + 1);
  level[0] = S(1) - binary_probs[0];
  for (Eigen::Index k = 1; k < km1; ++k) level[k] = binary_probs[k - 1] - binary_probs[k];
  level[km1] = binary_probs[km1 - 1];
  return level;
}

// Cumulative points of the ordinal head: P(y <= k) = 1 - p_k computed as
// logistic(-(score + b_k)) for accuracy near 1. Returns (0, ..., 1), length K+1.
template <class S>
VectorX<S> coral_cumulative(const S& score, const VectorX<S>& biases) {
  VectorX<S> cum(biases.size() + 2);
  cum[0] = S(0);
  for (Eigen::Index k = 0; k < biases.size(); ++k) cum[k + 1] = logistic(-(score + biases[k]));
  cum[biases.size() + 1] = S(1);
  return cum;
}

// Ordered-logit cumulative points (0, F(psi_1 - gz), ..., F(psi_{K-1} - gz), 1)
// with F the logistic cdf; nondecreasing because psi is increasing.
template <class S>
VectorX<S> ordered_logit_cumulative(const S& gamma_z, const VectorX<S>& psi) {
  VectorX<S> cum(psi.size() + 2);
  cum[0] = S(0);
  for (Eigen::Index k = 0; k < psi.size(); ++k) cum[k + 1] = logistic(psi[k] - gamma_z);
  cum[psi.size() + 1] = S(1);
  return cum;
}

// Adjacent differences of a cumulative vector; tiny negative diffs (rounding)
// clamp to zero, anything below -1e-12 is a contract violation.
template <class S>
VectorX<S> levels_from_cumulative(const VectorX<S>& cum) {
  if (cum.size() < 2) throw DomainError("cumulative vector needs at least two points");
  VectorX<S> level(cum.size() - 1);
  for (Eigen::Index k = 0; k + 1 < cum.size(); ++k) {
    level[k] = cum[k + 1] - cum[k];
    const double lv = scalar_value(level[k]);
    if (lv < -1e-12) {
      std::ostringstream msg;
      msg << "cumulative points decrease between " << k << " and " << (k + 1) << " by " << -lv;
      throw DomainError(msg.str());
    }
    if (lv < 0.0) level[k] = S(0);
  }
  return level;
}

}  // namespace copjoint
