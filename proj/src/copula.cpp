#include "copjoint/copula.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "copjoint/rng.hpp"

namespace copjoint {

const char* family_name(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::product:
      return "product";
    case CopulaFamily::gaussian:
      return "gaussian";
    case CopulaFamily::frank:
      return "frank";
    case CopulaFamily::clayton:
      return "clayton";
    case CopulaFamily::gumbel:
      return "gumbel";
    case CopulaFamily::joe:
      return "joe";
    case CopulaFamily::amh:
      return "amh";
    case CopulaFamily::fgm:
      return "fgm";
  }
  return "unknown";
}

std::optional<CopulaFamily> parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (CopulaFamily f : kAllFamilies) {
    if (lower == family_name(f)) return f;
  }
  return std::nullopt;
}

namespace {

ThetaVerdict accept(CopulaFamily f, double theta, std::string legal,
                    double indep_point) {
  ThetaVerdict v;
  v.ok = true;
  v.legal_interval = std::move(legal);
  v.independence_limit = (theta == indep_point);
  std::ostringstream msg;
  msg << family_name(f) << ": theta " << theta << " accepted";
  if (v.independence_limit) msg << " (independence limit)";
  v.message = msg.str();
  return v;
}

ThetaVerdict reject(CopulaFamily f, double theta, std::string legal) {
  ThetaVerdict v;
  v.ok = false;
  v.legal_interval = std::move(legal);
  std::ostringstream msg;
  msg << family_name(f) << ": theta " << theta << " outside legal range "
      << v.legal_interval;
  v.message = msg.str();
  return v;
}

}  // namespace

ThetaVerdict validate_theta(CopulaFamily f, double theta) {
  if (f == CopulaFamily::product) {
    ThetaVerdict v;
    v.ok = true;
    v.independence_limit = true;
    v.legal_interval = "none (no parameter)";
    v.message = "product: independence copula, theta ignored";
    return v;
  }
  if (!std::isfinite(theta)) {
    return reject(f, theta, "finite values only");
  }
  switch (f) {
    case CopulaFamily::gaussian:
      return (theta > -1.0 && theta < 1.0) ? accept(f, theta, "(-1, 1)", 0.0)
                                           : reject(f, theta, "(-1, 1)");
    case CopulaFamily::frank:
      return accept(f, theta, "(-inf, inf)", 0.0);
    case CopulaFamily::clayton:
      return (theta >= -1.0) ? accept(f, theta, "[-1, inf)", 0.0)
                             : reject(f, theta, "[-1, inf)");
    case CopulaFamily::gumbel:
      return (theta >= 1.0) ? accept(f, theta, "[1, inf)", 1.0)
                            : reject(f, theta, "[1, inf)");
    case CopulaFamily::joe:
      return (theta >= 1.0) ? accept(f, theta, "[1, inf)", 1.0)
                            : reject(f, theta, "[1, inf)");
    case CopulaFamily::amh:
      return (theta >= -1.0 && theta <= 1.0) ? accept(f, theta, "[-1, 1]", 0.0)
                                             : reject(f, theta, "[-1, 1]");
    case CopulaFamily::fgm:
      return (theta >= -1.0 && theta <= 1.0) ? accept(f, theta, "[-1, 1]", 0.0)
                                             : reject(f, theta, "[-1, 1]");
    case CopulaFamily::product:
      break;
  }
  return reject(f, theta, "unknown family");
}

void require_valid(const CopulaSpec& spec) {
  const ThetaVerdict v = validate_theta(spec.family, spec.theta);
  if (!v.ok) throw DomainError(v.message);
}

double eta_from_theta(CopulaFamily f, double theta) {
  require_valid({f, theta});
  switch (f) {
    case CopulaFamily::product:
      return 0.0;
    case CopulaFamily::gaussian:
    case CopulaFamily::amh:
    case CopulaFamily::fgm:
      if (std::abs(theta) >= 1.0) {
        throw DomainError("eta_from_theta: theta must be interior to (-1, 1)");
      }
      return std::atanh(theta);
    case CopulaFamily::frank:
      return theta;
    case CopulaFamily::gumbel:
    case CopulaFamily::joe:
      if (theta <= 1.0) {
        throw DomainError("eta_from_theta: theta must exceed 1");
      }
      return std::log(std::expm1(theta - 1.0));
    case CopulaFamily::clayton:
      if (theta <= 0.0) {
        throw DomainError("eta_from_theta: theta must be positive");
      }
      return std::log(std::expm1(theta));
  }
  throw DomainError("eta_from_theta: unknown family");
}

namespace {

void require_unit(double x, const char* what, bool open) {
  const bool ok = open ? (x > 0.0 && x < 1.0) : (x >= 0.0 && x <= 1.0);
  if (!ok) {
    std::ostringstream msg;
    msg << what << " = " << x << " outside " << (open ? "(0, 1)" : "[0, 1]");
    throw DomainError(msg.str());
  }
}

}  // namespace

double copula_cdf(const CopulaSpec& spec, double u, double v) {
  require_valid(spec);
  require_unit(u, "u", false);
  require_unit(v, "v", false);
  return copula_cdf(spec.family, spec.theta, u, v);
}

double copula_partial_u(const CopulaSpec& spec, double u, double v) {
  require_valid(spec);
  require_unit(u, "u", true);
  require_unit(v, "v", true);
  return copula_partial_u(spec.family, spec.theta, u, v);
}

double rectangle_mass(const CopulaSpec& spec, double u_lo, double u_hi,
                      double v_lo, double v_hi) {
  require_valid(spec);
  require_unit(u_lo, "u_lo", false);
  require_unit(u_hi, "u_hi", false);
  require_unit(v_lo, "v_lo", false);
  require_unit(v_hi, "v_hi", false);
  if (u_lo > u_hi || v_lo > v_hi) {
    throw DomainError("rectangle_mass: lower corner must not exceed upper");
  }
  const double mass =
      rectangle_mass_raw(spec.family, spec.theta, u_lo, u_hi, v_lo, v_hi);
  if (mass < -1e-10) {
    std::ostringstream msg;
    msg << "rectangle_mass: negative mass " << mass << " for "
        << family_name(spec.family) << " theta " << spec.theta;
    throw NumericalError(msg.str());
  }
  return std::max(mass, 0.0);
}

namespace {

double frank_tau(double theta) {
  if (theta == 0.0) return 0.0;
  if (theta < 0.0) return -frank_tau(-theta);
  if (theta < kThetaBand) return theta / 9.0;
  return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

double joe_tau(double theta) {
  if (theta == 1.0) return 0.0;
  const double q = 2.0 * (1.0 - theta) / theta;
  const double integral = integrate_01(
      [&](double t, double omt) {
        return t * std::log(t) * std::exp(q * std::log(omt));
      },
      1e-11);
  return 1.0 + 4.0 / (theta * theta) * integral;
}

double amh_tau(double theta) {
  if (std::abs(theta) < 1e-4) {
    return 2.0 * theta / 9.0 + theta * theta / 18.0;
  }
  if (theta == 1.0) return 1.0 / 3.0;
  const double a = (3.0 * theta - 2.0) / (3.0 * theta);
  const double b = 2.0 * (1.0 - theta) * (1.0 - theta) * std::log1p(-theta) /
                   (3.0 * theta * theta);
  return a - b;
}

}  // namespace

double kendall_tau(const CopulaSpec& spec) {
  require_valid(spec);
  const double th = spec.theta;
  switch (spec.family) {
    case CopulaFamily::product:
      return 0.0;
    case CopulaFamily::gaussian:
      return 2.0 / kPi * std::asin(th);
    case CopulaFamily::clayton:
      return th / (th + 2.0);
    case CopulaFamily::gumbel:
      return (th - 1.0) / th;
    case CopulaFamily::fgm:
      return 2.0 * th / 9.0;
    case CopulaFamily::frank:
      return frank_tau(th);
    case CopulaFamily::joe:
      return joe_tau(th);
    case CopulaFamily::amh:
      return amh_tau(th);
  }
  throw DomainError("kendall_tau: unknown family");
}

namespace {

double frank_conditional_inverse(double theta, double u, double t) {
  const double g1 = std::expm1(-theta);
  const double den = std::exp(-theta * u) * (1.0 - t) + t;
  const double gv = t * g1 / den;
  return -std::log1p(gv) / theta;
}

double clayton_conditional_inverse(double theta, double u, double t) {
  // v = (1 + u^-th (t^(-th/(1+th)) - 1))^(-1/th), assembled in logs
  const double a = -theta * std::log(u);
  const double b = -theta / (1.0 + theta) * std::log(t);
  const double z = a + std::log(std::expm1(b));
  return std::exp(-softplus(z) / theta);
}

double fgm_conditional_inverse(double theta, double u, double t) {
  const double a = theta * (1.0 - 2.0 * u);
  if (std::abs(a) < 1e-9) return t;
  const double disc = (1.0 + a) * (1.0 + a) - 4.0 * a * t;
  return ((1.0 + a) - std::sqrt(disc)) / (2.0 * a);
}

double bisect_conditional(const CopulaSpec& spec, double u, double t) {
  double lo = 1e-15;
  double hi = 1.0 - 1e-15;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = copula_partial_u(spec.family, spec.theta, u, mid);
    (h < t ? lo : hi) = mid;
  }
  if (hi - lo > 1e-10) {
    throw NumericalError("sample_pair: conditional inverse did not converge");
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> sample_pair(const CopulaSpec& spec, Rng& rng) {
  require_valid(spec);
  const double u = rng.uniform();
  const double t = rng.uniform();
  const double th = spec.theta;
  switch (spec.family) {
    case CopulaFamily::product:
      return {u, t};
    case CopulaFamily::gaussian: {
      const double z1 = normal_quantile(u);
      const double z2 = normal_quantile(t);
      const double y = th * z1 + std::sqrt((1.0 - th) * (1.0 + th)) * z2;
      return {normal_cdf(z1), normal_cdf(y)};
    }
    case CopulaFamily::frank:
      if (std::abs(th) < kThetaBand) return {u, t};
      return {u, frank_conditional_inverse(th, u, t)};
    case CopulaFamily::clayton:
      if (th < 0.0) {
        throw DomainError(
            "sample_pair: clayton sampling requires theta >= 0");
      }
      if (th < kThetaBand) return {u, t};
      return {u, clayton_conditional_inverse(th, u, t)};
    case CopulaFamily::fgm:
      return {u, fgm_conditional_inverse(th, u, t)};
    case CopulaFamily::gumbel:
    case CopulaFamily::joe:
      if (th == 1.0) return {u, t};
      return {u, bisect_conditional(spec, u, t)};
    case CopulaFamily::amh:
      if (std::abs(th) < kThetaBand) return {u, t};
      return {u, bisect_conditional(spec, u, t)};
  }
  throw DomainError("sample_pair: unknown family");
}

}  // namespace copjoint
