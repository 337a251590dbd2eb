#include "copjoint/math.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "copjoint/common.hpp"

namespace copjoint {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Acklam's rational approximation to the probit function.
double probit_estimate(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0,1)");
  }
  double x = probit_estimate(p);
  // one Halley step on F(x) - p = 0
  const double e = normal_cdf(x) - p;
  const double f = normal_pdf(x);
  if (f > 0.0) {
    const double u = e / f;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

namespace {

// 20-point Gauss-Legendre rule on [-1,1], positive half; the rule is
// symmetric so each entry is evaluated at both signs
constexpr std::array<double, 10> kGlNode = {
    0.07652652113349733, 0.2277858511416451, 0.3737060887154196,
    0.5108670019508271,  0.6360536807265150, 0.7463319064601508,
    0.8391169718222188,  0.9122344282513259, 0.9639719272779138,
    0.9931285991850949};
constexpr std::array<double, 10> kGlWeight = {
    0.1527533871307258,  0.1491729864726037,  0.1420961093183820,
    0.1316886384491766,  0.1181945319615184,  0.1019301198172404,
    0.08327674157670475, 0.06267204833410906, 0.04060142980038694,
    0.01761400713915212};

}  // namespace

double bvn_upper(double dh, double dk, double r) {
  if (!(r >= -1.0 && r <= 1.0)) {
    throw DomainError("bvn_upper: correlation must lie in [-1,1]");
  }
  const double tp = 2.0 * kPi;
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    if (std::abs(r) > 0.0) {
      const double hs = 0.5 * (h * h + k * k);
      const double asr = 0.5 * std::asin(r);
      for (std::size_t i = 0; i < kGlNode.size(); ++i) {
        for (int sign = -1; sign <= 1; sign += 2) {
          const double sn = std::sin(asr * (1.0 + sign * kGlNode[i]));
          bvn += kGlWeight[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn *= asr / tp;
    }
    return bvn + normal_cdf(-h) * normal_cdf(-k);
  }

  // |r| >= 0.925: Drezner-Wesolowsky tail expansion
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    const double asr0 = -0.5 * (bs / as + hk);
    if (asr0 > -100.0) {
      bvn = a * std::exp(asr0) *
            (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(tp) * normal_cdf(-b / a);
      bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for (std::size_t i = 0; i < kGlNode.size(); ++i) {
      for (int sign = -1; sign <= 1; sign += 2) {
        const double x = a * (1.0 + sign * kGlNode[i]);
        const double xs = x * x;
        const double asr = -0.5 * (bs / xs + hk);
        if (asr > -100.0) {
          const double rs = std::sqrt(1.0 - xs);
          const double sp2 = 1.0 + c * xs * (1.0 + d * xs);
          const double ep = std::exp(-0.5 * hk * (1.0 - rs) / (1.0 + rs)) / rs;
          bvn += a * kGlWeight[i] * std::exp(asr) * (ep - sp2);
        }
      }
    }
    bvn = -bvn / tp;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double l = (h < 0.0) ? normal_cdf(k) - normal_cdf(h)
                               : normal_cdf(-h) - normal_cdf(-k);
    bvn = l - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

double bvn_cdf(double x, double y, double r) { return bvn_upper(-x, -y, r); }

double bvn_pdf(double x, double y, double r) {
  const double omr2 = (1.0 - r) * (1.0 + r);
  if (omr2 <= 0.0) {
    throw DomainError("bvn_pdf: correlation must lie in (-1,1)");
  }
  const double q = (x * x - 2.0 * r * x * y + y * y) / omr2;
  return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(omr2));
}

namespace {

double debye1_integrand(double t) {
  // t/(e^t - 1), series near zero where expm1 loses nothing but the ratio
  // is 0/0
  if (std::abs(t) < 1e-8) return 1.0 - 0.5 * t;
  return t / std::expm1(t);
}

double adaptive_simpson(double (*f)(double), double a, double b, double fa,
                        double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double debye1(double x) {
  if (!(x > 0.0)) {
    throw DomainError("debye1: argument must be positive");
  }
  const double fa = debye1_integrand(0.0);
  const double fb = debye1_integrand(x);
  const double fm = debye1_integrand(0.5 * x);
  const double whole = x / 6.0 * (fa + 4.0 * fm + fb);
  const double integral =
      adaptive_simpson(debye1_integrand, 0.0, x, fa, fm, fb, whole, 1e-12, 40);
  return integral / x;
}

double integrate_01(const std::function<double(double, double)>& f,
                    double abs_tol) {
  // nodes t = sigma(2g), 1-t = sigma(-2g) with g = (pi/2) sinh(x);
  // weight dt/dx = (pi/4) cosh(x) / cosh^2(g)
  constexpr double x_max = 4.0;
  auto eval = [&](double x) {
    const double g = 0.5 * kPi * std::sinh(x);
    const double cg = std::cosh(g);
    const double w = 0.25 * kPi * std::cosh(x) / (cg * cg);
    if (w < 1e-300) return 0.0;
    const double t = logistic(2.0 * g);
    const double omt = logistic(-2.0 * g);
    return w * f(t, omt);
  };

  double h = 1.0;
  double sum = eval(0.0);
  for (int k = 1; k * h <= x_max; ++k) {
    sum += eval(k * h) + eval(-k * h);
  }
  double integral = h * sum;
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double x = h; x <= x_max; x += 2.0 * h) {
      add += eval(x) + eval(-x);
    }
    const double next = 0.5 * integral + h * add;
    if (level >= 2 && std::abs(next - integral) <= abs_tol) {
      return next;
    }
    integral = next;
  }
  return integral;
}

namespace {

// counts inversions while merge-sorting values[lo, hi)
long long merge_count(std::vector<double>& values, std::vector<double>& scratch,
                      std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long count = merge_count(values, scratch, lo, mid) +
                    merge_count(values, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t out = lo;
  while (i < mid && j < hi) {
    if (values[i] <= values[j]) {
      scratch[out++] = values[i++];
    } else {
      count += static_cast<long long>(mid - i);
      scratch[out++] = values[j++];
    }
  }
  while (i < mid) scratch[out++] = values[i++];
  while (j < hi) scratch[out++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

}  // namespace

double sample_kendall_tau(const std::vector<double>& u,
                          const std::vector<double>& v) {
  if (u.size() != v.size() || u.size() < 2) {
    throw DomainError("sample_kendall_tau: need two equal-length samples, n >= 2");
  }
  const std::size_t n = u.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (u[a] != u[b]) return u[a] < u[b];
    return v[a] < v[b];
  });
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = v[order[i]];
  std::vector<double> scratch(n);
  const long long inversions = merge_count(w, scratch, 0, n);
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - 2.0 * static_cast<double>(inversions) / pairs;
}

}  // namespace copjoint
