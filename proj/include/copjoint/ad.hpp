#pragma once

// Tape-based reverse-mode differentiation with a scalar type that plugs into
// Eigen. Record a batch loss as an expression of Var inputs, then run one
// reverse sweep to get all parameter adjoints. Single-threaded by design:
// the active tape is thread_local and cleared by the caller per batch.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "copjoint/common.hpp"
#include "copjoint/math.hpp"

namespace copjoint::ad {

struct Node {
  double wa = 0.0;
  double wb = 0.0;
  int a = -1;
  int b = -1;
};

class Tape {
 public:
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  std::size_t size() const { return nodes_.size(); }

  int input() {
    nodes_.push_back(Node{});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int push1(int a, double wa) {
    nodes_.push_back(Node{wa, 0.0, a, -1});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int push2(int a, int b, double wa, double wb) {
    nodes_.push_back(Node{wa, wb, a, b});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // adjoints of every node w.r.t. node `seed`
  void sweep(int seed, std::vector<double>& adj) const {
    adj.assign(nodes_.size(), 0.0);
    if (seed < 0) return;
    adj[static_cast<std::size_t>(seed)] = 1.0;
    for (int i = seed; i >= 0; --i) {
      const double g = adj[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += n.wa * g;
      if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += n.wb * g;
    }
  }

 private:
  std::vector<Node> nodes_;
};

inline Tape& tape() {
  static thread_local Tape t;
  return t;
}

struct Var {
  double v = 0.0;
  int idx = -1;  // -1 marks a constant that is not on the tape

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: implicit constant lift
  Var(double value, int index) : v(value), idx(index) {}

  static Var input(double value) { return Var(value, tape().input()); }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);
};

inline double scalar_value(const Var& x) { return x.v; }

inline Var make_unary(const Var& x, double value, double dx) {
  if (x.idx < 0) return Var(value);
  return Var(value, tape().push1(x.idx, dx));
}

inline Var make_binary(const Var& x, const Var& y, double value, double dx,
                       double dy) {
  if (x.idx < 0 && y.idx < 0) return Var(value);
  if (y.idx < 0) return Var(value, tape().push1(x.idx, dx));
  if (x.idx < 0) return Var(value, tape().push1(y.idx, dy));
  return Var(value, tape().push2(x.idx, y.idx, dx, dy));
}

inline Var operator+(const Var& x, const Var& y) {
  return make_binary(x, y, x.v + y.v, 1.0, 1.0);
}
inline Var operator-(const Var& x, const Var& y) {
  return make_binary(x, y, x.v - y.v, 1.0, -1.0);
}
inline Var operator*(const Var& x, const Var& y) {
  return make_binary(x, y, x.v * y.v, y.v, x.v);
}
inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.v;
  return make_binary(x, y, x.v * inv, inv, -x.v * inv * inv);
}
inline Var operator-(const Var& x) { return make_unary(x, -x.v, -1.0); }
inline Var operator+(const Var& x) { return x; }

inline Var operator+(const Var& x, double y) { return x + Var(y); }
inline Var operator+(double x, const Var& y) { return Var(x) + y; }
inline Var operator-(const Var& x, double y) { return x - Var(y); }
inline Var operator-(double x, const Var& y) { return Var(x) - y; }
inline Var operator*(const Var& x, double y) { return x * Var(y); }
inline Var operator*(double x, const Var& y) { return Var(x) * y; }
inline Var operator/(const Var& x, double y) { return x / Var(y); }
inline Var operator/(double x, const Var& y) { return Var(x) / y; }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& x, const Var& y) { return x.v < y.v; }
inline bool operator>(const Var& x, const Var& y) { return x.v > y.v; }
inline bool operator<=(const Var& x, const Var& y) { return x.v <= y.v; }
inline bool operator>=(const Var& x, const Var& y) { return x.v >= y.v; }
inline bool operator==(const Var& x, const Var& y) { return x.v == y.v; }
inline bool operator!=(const Var& x, const Var& y) { return x.v != y.v; }

inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return make_unary(x, e, e);
}
inline Var log(const Var& x) { return make_unary(x, std::log(x.v), 1.0 / x.v); }
inline Var log1p(const Var& x) {
  return make_unary(x, std::log1p(x.v), 1.0 / (1.0 + x.v));
}
inline Var expm1(const Var& x) {
  const double e = std::expm1(x.v);
  return make_unary(x, e, e + 1.0);
}
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.v);
  return make_unary(x, s, 0.5 / s);
}
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.v);
  return make_unary(x, t, 1.0 - t * t);
}
inline Var abs(const Var& x) {
  return make_unary(x, std::abs(x.v), x.v >= 0.0 ? 1.0 : -1.0);
}
inline Var fabs(const Var& x) { return abs(x); }
inline bool isfinite(const Var& x) { return std::isfinite(x.v); }

// value-side max/min: picks one argument, so the derivative follows the
// winner (correct except on the tie set)
inline Var max(const Var& x, const Var& y) { return x.v >= y.v ? x : y; }
inline Var min(const Var& x, const Var& y) { return x.v <= y.v ? x : y; }

inline Var normal_cdf(const Var& x) {
  return make_unary(x, copjoint::normal_cdf(x.v), copjoint::normal_pdf(x.v));
}
inline Var normal_quantile(const Var& p) {
  const double q = copjoint::normal_quantile(p.v);
  return make_unary(p, q, 1.0 / copjoint::normal_pdf(q));
}

// three-parent custom node, composed from two tape records:
// t = wx*x + wy*y, out = t + wr*rho (all weights are local partials)
inline Var make_ternary(const Var& x, const Var& y, const Var& r, double value,
                        double dx, double dy, double dr) {
  Var t = make_binary(x, y, 0.0, dx, dy);
  return make_binary(t, r, value, 1.0, dr);
}

// bivariate normal CDF with closed-form partials:
// d/dx = phi(x) Phi((y-rx)/sqrt(1-r^2)), symmetric in y, d/dr = bvn density
inline Var bvn_cdf(const Var& x, const Var& y, const Var& r) {
  const double value = copjoint::bvn_cdf(x.v, y.v, r.v);
  const double omr2 = (1.0 - r.v) * (1.0 + r.v);
  const double s = std::sqrt(omr2);
  const double dx =
      copjoint::normal_pdf(x.v) * copjoint::normal_cdf((y.v - r.v * x.v) / s);
  const double dy =
      copjoint::normal_pdf(y.v) * copjoint::normal_cdf((x.v - r.v * y.v) / s);
  // at |r| == 1 the density blows up and the partial does not exist; record
  // NaN so the caller's finiteness check reports which parameter saturated
  const double dr = std::abs(r.v) < 1.0
                        ? copjoint::bvn_pdf(x.v, y.v, r.v)
                        : std::numeric_limits<double>::quiet_NaN();
  return make_ternary(x, y, r, value, dx, dy, dr);
}

// Eigen support hooks, found by argument-dependent lookup
inline const Var& conj(const Var& x) { return x; }
inline const Var& real(const Var& x) { return x; }
inline Var imag(const Var&) { return Var(0.0); }
inline Var abs2(const Var& x) { return x * x; }

}  // namespace copjoint::ad

namespace Eigen {

template <>
struct NumTraits<copjoint::ad::Var> : NumTraits<double> {
  using Real = copjoint::ad::Var;
  using NonInteger = copjoint::ad::Var;
  using Nested = copjoint::ad::Var;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 4
  };
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<copjoint::ad::Var, double, BinaryOp> {
  typedef copjoint::ad::Var ReturnType;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, copjoint::ad::Var, BinaryOp> {
  typedef copjoint::ad::Var ReturnType;
};

}  // namespace Eigen

namespace copjoint::ad {

// value and gradient of f: R^n -> Var at p, via one forward record and one
// reverse sweep on a fresh tape
template <class F>
double gradient(F&& f, const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
  Tape& t = tape();
  t.clear();
  Eigen::Matrix<Var, Eigen::Dynamic, 1> x(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) x[i] = Var::input(p[i]);
  const Var y = f(x);
  if (!std::isfinite(y.v)) {
    throw NumericalError("gradient: objective is not finite");
  }
  static thread_local std::vector<double> adj;
  t.sweep(y.idx, adj);
  grad.resize(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    grad[i] = y.idx < 0 ? 0.0 : adj[static_cast<std::size_t>(x[i].idx)];
  }
  return y.v;
}

}  // namespace copjoint::ad
