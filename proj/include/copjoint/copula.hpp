#pragma once

// Bivariate copula families: CDF, conditional CDF (partial in u), rectangle
// mass, Kendall tau, and conditional-method sampling. The kernels are
// templated on the scalar so the same code runs in double and on the
// differentiation tape; dispatch branches compare plain values only.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "copjoint/common.hpp"
#include "copjoint/math.hpp"

namespace copjoint {

class Rng;

enum class CopulaFamily : int {
  product = 0,
  gaussian,
  frank,
  clayton,
  gumbel,
  joe,
  amh,
  fgm
};

inline constexpr std::array<CopulaFamily, 8> kAllFamilies = {
    CopulaFamily::product, CopulaFamily::gaussian, CopulaFamily::frank,
    CopulaFamily::clayton, CopulaFamily::gumbel,   CopulaFamily::joe,
    CopulaFamily::amh,     CopulaFamily::fgm};

const char* family_name(CopulaFamily f);
std::optional<CopulaFamily> parse_family(std::string_view name);
inline bool family_has_theta(CopulaFamily f) {
  return f != CopulaFamily::product;
}

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::product;
  double theta = 0.0;
};

struct ThetaVerdict {
  bool ok = false;
  bool independence_limit = false;  // theta sits exactly at the family's
                                    // independence point
  std::string legal_interval;
  std::string message;
};

ThetaVerdict validate_theta(CopulaFamily f, double theta);
// throws DomainError when validate_theta rejects
void require_valid(const CopulaSpec& spec);

// dependence parameters within this band are evaluated by first-order
// expansions around independence so values and theta-gradients stay finite
inline constexpr double kThetaBand = 1e-5;

namespace copula_detail {

template <class S>
S frank_cdf_large(const S& theta, const S& u, const S& v) {
  // theta > 30: C = -(1/th)[ln T - ln(1-e^-th)] with
  // T = e^-thu + e^-thv - e^-th(u+v) - e^-th, factored by the largest term
  using std::exp;
  using std::log;
  using std::log1p;
  S a1 = -theta * u;
  S a2 = -theta * v;
  const S& m = scalar_value(a1) >= scalar_value(a2) ? a1 : a2;
  S t = exp(a1 - m) + exp(a2 - m) - exp(a1 + a2 - m) - exp(-theta - m);
  return -(m + log(t) - log1p(-exp(-theta))) / theta;
}

template <class S>
S frank_cdf(const S& theta, const S& u, const S& v) {
  using std::expm1;
  using std::log1p;
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return u * v * (1.0 + theta * (0.5 * (1.0 - u) * (1.0 - v)));
  }
  if (th > 30.0) return frank_cdf_large(theta, u, v);
  if (th < -30.0) return u - frank_cdf_large(-theta, u, 1.0 - v);
  S a = expm1(-theta * u);
  S b = expm1(-theta * v);
  S c = expm1(-theta);
  return -log1p(a * b / c) / theta;
}

template <class S>
S clayton_cdf(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return u * v * (1.0 + theta * (log(u) * log(v)));
  }
  if (th > 0.0) {
    S ea = -theta * log(u);
    S eb = -theta * log(v);
    if (scalar_value(ea) < 30.0 && scalar_value(eb) < 30.0) {
      S d = expm1(ea) + expm1(eb);
      return exp(-log1p(d) / theta);
    }
    const S& m = scalar_value(ea) >= scalar_value(eb) ? ea : eb;
    S ln_s = m + log(exp(ea - m) + exp(eb - m) - exp(-m));
    return exp(-ln_s / theta);
  }
  // theta in [-1, 0): the expression can leave [0,1]^2 support, clamp at 0
  S base = exp(-theta * log(u)) + exp(-theta * log(v)) - 1.0;
  if (scalar_value(base) <= 0.0) return S(0.0);
  return exp(-log(base) / theta);
}

template <class S>
S gumbel_cdf(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::log;
  using std::log1p;
  S x = -log(u);
  S y = -log(v);
  const bool x_big = scalar_value(x) >= scalar_value(y);
  const S& big = x_big ? x : y;
  const S& small = x_big ? y : x;
  S r = exp(theta * log(small / big));
  S s = big * exp(log1p(r) / theta);
  return exp(-s);
}

template <class S>
S joe_cdf(const S& theta, const S& u, const S& v) {
  using std::expm1;
  using std::log1p;
  // q = (1-u)^th - 1, p = (1-v)^th - 1; C = 1 - (1 - qp)^(1/th)
  S q = expm1(theta * log1p(-u));
  S p = expm1(theta * log1p(-v));
  S ln_d = log1p(-(q * p));
  return -expm1(ln_d / theta);
}

template <class S>
S amh_cdf(const S& theta, const S& u, const S& v) {
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return u * v * (1.0 + theta * ((1.0 - u) * (1.0 - v)));
  }
  return u * v / (1.0 - theta * ((1.0 - u) * (1.0 - v)));
}

template <class S>
S fgm_cdf(const S& theta, const S& u, const S& v) {
  return u * v * (1.0 + theta * ((1.0 - u) * (1.0 - v)));
}

template <class S>
S gaussian_cdf(const S& theta, const S& u, const S& v) {
  S x = normal_quantile(u);
  S y = normal_quantile(v);
  return bvn_cdf(x, y, theta);
}

template <class S>
S frank_partial_large(const S& theta, const S& u, const S& v) {
  // theta > 30: dC/du = (e^-thu - e^-th(u+v)) / T, same factoring as the CDF
  using std::exp;
  S a1 = -theta * u;
  S a2 = -theta * v;
  const S& m = scalar_value(a1) >= scalar_value(a2) ? a1 : a2;
  S num = exp(a1 - m) - exp(a1 + a2 - m);
  S den = exp(a1 - m) + exp(a2 - m) - exp(a1 + a2 - m) - exp(-theta - m);
  return num / den;
}

template <class S>
S frank_partial_u(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::expm1;
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return v * (1.0 + theta * (0.5 * (1.0 - 2.0 * u) * (1.0 - v)));
  }
  if (th > 30.0) return frank_partial_large(theta, u, v);
  if (th < -30.0) return 1.0 - frank_partial_large(-theta, u, 1.0 - v);
  S gu = expm1(-theta * u);
  S gv = expm1(-theta * v);
  S g1 = expm1(-theta);
  return exp(-theta * u) * gv / (g1 + gu * gv);
}

template <class S>
S clayton_partial_u(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return v * (1.0 + theta * (log(v) * (log(u) + 1.0)));
  }
  if (th > 0.0) {
    S ea = -theta * log(u);
    S eb = -theta * log(v);
    S ln_s;
    if (scalar_value(ea) < 30.0 && scalar_value(eb) < 30.0) {
      ln_s = log1p(expm1(ea) + expm1(eb));
    } else {
      const S& m = scalar_value(ea) >= scalar_value(eb) ? ea : eb;
      ln_s = m + log(exp(ea - m) + exp(eb - m) - exp(-m));
    }
    return exp(-(theta + 1.0) * log(u) - (1.0 / theta + 1.0) * ln_s);
  }
  S base = exp(-theta * log(u)) + exp(-theta * log(v)) - 1.0;
  if (scalar_value(base) <= 0.0) return S(0.0);
  return exp(-(theta + 1.0) * log(u) - (1.0 / theta + 1.0) * log(base));
}

template <class S>
S gumbel_partial_u(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::log;
  using std::log1p;
  S x = -log(u);
  S y = -log(v);
  const bool x_big = scalar_value(x) >= scalar_value(y);
  const S& big = x_big ? x : y;
  const S& small = x_big ? y : x;
  S r = exp(theta * log(small / big));
  S ln_s = log(big) + log1p(r) / theta;
  S s = exp(ln_s);
  return exp(-s + (1.0 - theta) * ln_s + (theta - 1.0) * log(x) - log(u));
}

template <class S>
S joe_partial_u(const S& theta, const S& u, const S& v) {
  using std::exp;
  using std::expm1;
  using std::log1p;
  S q = expm1(theta * log1p(-u));
  S p = expm1(theta * log1p(-v));
  S ln_d = log1p(-(q * p));
  return exp((1.0 / theta - 1.0) * ln_d + (theta - 1.0) * log1p(-u)) * (-p);
}

template <class S>
S amh_partial_u(const S& theta, const S& u, const S& v) {
  const double th = scalar_value(theta);
  if (std::abs(th) < kThetaBand) {
    return v * (1.0 + theta * ((1.0 - 2.0 * u) * (1.0 - v)));
  }
  S den = 1.0 - theta * ((1.0 - u) * (1.0 - v));
  return v * (den - u * (theta * (1.0 - v))) / (den * den);
}

template <class S>
S fgm_partial_u(const S& theta, const S& u, const S& v) {
  return v * (1.0 + theta * ((1.0 - 2.0 * u) * (1.0 - v)));
}

template <class S>
S gaussian_partial_u(const S& theta, const S& u, const S& v) {
  using std::sqrt;
  S x = normal_quantile(u);
  S y = normal_quantile(v);
  S s = sqrt((1.0 - theta) * (1.0 + theta));
  return normal_cdf((y - theta * x) / s);
}

}  // namespace copula_detail

// C(u,v;theta); assumes theta valid for the family, u,v in [0,1]
template <class S>
S copula_cdf(CopulaFamily f, const S& theta, const S& u, const S& v) {
  const double uu = scalar_value(u);
  const double vv = scalar_value(v);
  if (uu <= 0.0 || vv <= 0.0) return S(0.0);
  if (uu >= 1.0 && vv >= 1.0) return S(1.0);
  if (uu >= 1.0) return v;
  if (vv >= 1.0) return u;
  switch (f) {
    case CopulaFamily::product:
      return u * v;
    case CopulaFamily::gaussian:
      return copula_detail::gaussian_cdf(theta, u, v);
    case CopulaFamily::frank:
      return copula_detail::frank_cdf(theta, u, v);
    case CopulaFamily::clayton:
      return copula_detail::clayton_cdf(theta, u, v);
    case CopulaFamily::gumbel:
      return copula_detail::gumbel_cdf(theta, u, v);
    case CopulaFamily::joe:
      return copula_detail::joe_cdf(theta, u, v);
    case CopulaFamily::amh:
      return copula_detail::amh_cdf(theta, u, v);
    case CopulaFamily::fgm:
      return copula_detail::fgm_cdf(theta, u, v);
  }
  throw DomainError("copula_cdf: unknown family");
}

// conditional CDF dC/du, the distribution of V given U = u; assumes
// u,v interior
template <class S>
S copula_partial_u(CopulaFamily f, const S& theta, const S& u, const S& v) {
  switch (f) {
    case CopulaFamily::product:
      return v;
    case CopulaFamily::gaussian:
      return copula_detail::gaussian_partial_u(theta, u, v);
    case CopulaFamily::frank:
      return copula_detail::frank_partial_u(theta, u, v);
    case CopulaFamily::clayton:
      return copula_detail::clayton_partial_u(theta, u, v);
    case CopulaFamily::gumbel:
      return copula_detail::gumbel_partial_u(theta, u, v);
    case CopulaFamily::joe:
      return copula_detail::joe_partial_u(theta, u, v);
    case CopulaFamily::amh:
      return copula_detail::amh_partial_u(theta, u, v);
    case CopulaFamily::fgm:
      return copula_detail::fgm_partial_u(theta, u, v);
  }
  throw DomainError("copula_partial_u: unknown family");
}

// signed mass of the rectangle (u_lo, u_hi] x (v_lo, v_hi]
template <class S>
S rectangle_mass_raw(CopulaFamily f, const S& theta, const S& u_lo,
                     const S& u_hi, const S& v_lo, const S& v_hi) {
  return copula_cdf(f, theta, u_hi, v_hi) - copula_cdf(f, theta, u_lo, v_hi) -
         copula_cdf(f, theta, u_hi, v_lo) + copula_cdf(f, theta, u_lo, v_lo);
}

// map an unconstrained optimizer variable into the family's legal theta
// range: tanh for [-1,1] families, shifted softplus for [1,inf), softplus
// for (0,inf), identity for frank
template <class S>
S theta_from_eta(CopulaFamily f, const S& eta) {
  using std::tanh;
  switch (f) {
    case CopulaFamily::product:
      return S(0.0);
    case CopulaFamily::gaussian:
    case CopulaFamily::amh:
    case CopulaFamily::fgm:
      return tanh(eta);
    case CopulaFamily::frank:
      return eta;
    case CopulaFamily::gumbel:
    case CopulaFamily::joe:
      return 1.0 + softplus(eta);
    case CopulaFamily::clayton:
      return softplus(eta);
  }
  throw DomainError("theta_from_eta: unknown family");
}

// inverse of theta_from_eta for valid interior theta
double eta_from_theta(CopulaFamily f, double theta);

// validated double entry points
double copula_cdf(const CopulaSpec& spec, double u, double v);
double copula_partial_u(const CopulaSpec& spec, double u, double v);
// negative mass below -1e-10 is a numerical error; tiny negatives clamp to 0
double rectangle_mass(const CopulaSpec& spec, double u_lo, double u_hi,
                      double v_lo, double v_hi);

// population Kendall tau of the family at the given theta
double kendall_tau(const CopulaSpec& spec);

// one (u,v) draw by the conditional method; closed-form inverse where the
// family has one, bisection to |dv| <= 1e-10 otherwise
std::pair<double, double> sample_pair(const CopulaSpec& spec, Rng& rng);

}  // namespace copjoint
