#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace copjoint {

inline constexpr double kPi = 3.14159265358979323846;

inline double scalar_value(double x) { return x; }

// ln(1+e^x) without overflow; works for double and for the tape scalar.
template <class S>
S softplus(const S& x) {
  using std::exp;
  using std::log1p;
  if (scalar_value(x) > 0.0) return x + log1p(exp(-x));
  return log1p(exp(x));
}

// 1/(1+e^-x); evaluated from the side that avoids overflow.
template <class S>
S logistic(const S& x) {
  using std::exp;
  if (scalar_value(x) >= 0.0) return 1.0 / (1.0 + exp(-x));
  S e = exp(x);
  return e / (1.0 + e);
}

double normal_pdf(double x);
double normal_cdf(double x);
// inverse of normal_cdf on (0,1); rational approximation polished by one
// Halley step, |rel err| < 1e-14
double normal_quantile(double p);

// P(X > dh, Y > dk) for standard bivariate normal with correlation r,
// Drezner-Wesolowsky/Genz Gauss-Legendre quadrature, 20 fixed nodes,
// abs error <= 1e-7 documented (observed ~1e-15 for |r| < 0.925)
double bvn_upper(double dh, double dk, double r);
// P(X <= x, Y <= y)
double bvn_cdf(double x, double y, double r);
double bvn_pdf(double x, double y, double r);

// first Debye function (1/x)∫₀ˣ t/(eᵗ-1) dt for x > 0, abs err <= 1e-10
double debye1(double x);

// ∫₀¹ f(t, 1-t) dt by tanh-sinh quadrature; integrable endpoint
// singularities allowed. f receives both t and 1-t so integrands can use
// whichever is accurate near their endpoint.
double integrate_01(const std::function<double(double, double)>& f,
                    double abs_tol);

// sample Kendall tau (tau-a) via merge-sort inversion counting, O(n log n);
// assumes continuous samples (ties have probability zero)
double sample_kendall_tau(const std::vector<double>& u,
                          const std::vector<double>& v);

}  // namespace copjoint
