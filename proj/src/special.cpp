#include "knockoff/special.hpp"

#include "knockoff/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace knockoff {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

// Acklam's rational approximation followed by one Halley step.
double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidInputError("normal_quantile: u outside [0,1]");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    double q = u - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against erfc-based CDF.
  double e = normal_cdf(x) - u;
  double f = normal_pdf(x);
  if (f > 0.0) {
    double w = e / f;
    x -= w / (1.0 + 0.5 * x * w);
  }
  return x;
}

std::vector<std::pair<double, double>> gauss_legendre(int n, double a,
                                                      double b) {
  std::vector<std::pair<double, double>> out(n);
  const double eps = 1e-15;
  int m = (n + 1) / 2;
  double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < eps) break;
    }
    double w = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    out[i] = {xm - xl * z, w};
    out[n - 1 - i] = {xm + xl * z, w};
  }
  return out;
}

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k)) throw InvalidInputError("bvn_cdf: NaN");
  if (!(rho >= -1.0 && rho <= 1.0))
    throw InvalidInputError("bvn_cdf: correlation outside [-1,1]");
  if (h > k) std::swap(h, k);  // symmetric argument order, bit-exact
  if (std::isinf(h)) {
    if (h < 0) return 0.0;
    return normal_cdf(k);
  }
  if (std::isinf(k)) {
    if (k < 0) return 0.0;
    return normal_cdf(h);
  }
  if (rho == 1.0) return normal_cdf(h);
  if (rho == -1.0) return std::max(normal_cdf(h) + normal_cdf(k) - 1.0, 0.0);
  if (rho == 0.0) return normal_cdf(h) * normal_cdf(k);

  // Phi2(h,k,rho) = Phi(h)Phi(k)
  //   + (1/2pi) Int_0^{asin rho} exp(-(h^2+k^2-2hk sin t) / (2 cos^2 t)) dt
  static const auto nodes = gauss_legendre(48, 0.0, 1.0);
  const double asr = std::asin(rho);
  double sum = 0.0;
  for (const auto& [x, w] : nodes) {
    double t = asr * x;
    double st = std::sin(t);
    double c2 = 1.0 - st * st;
    sum += w * std::exp(-(h * h + k * k - 2.0 * h * k * st) / (2.0 * c2));
  }
  double val = normal_cdf(h) * normal_cdf(k) + sum * asr / (2.0 * kPi);
  return std::min(1.0, std::max(0.0, val));
}

namespace {

// Lower incomplete gamma by series, upper by Lentz continued fraction.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double hh = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    hh *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * hh;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw InvalidInputError("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

namespace {

double inc_beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double hh = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    hh *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    hh *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return hh;
}

}  // namespace

double inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0)
    throw InvalidInputError("inc_beta: bad arguments");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(lnfront);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * inc_beta_cf(a, b, x) / a;
  return 1.0 - front * inc_beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double x, double nu) {
  if (!(nu > 0.0)) throw InvalidInputError("student_t_cdf: nu <= 0");
  if (x == 0.0) return 0.5;
  double ib = inc_beta(nu / 2.0, 0.5, nu / (nu + x * x));
  return x > 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

double chi2_quantile(double prob, double dof) {
  if (!(prob > 0.0 && prob < 1.0) || !(dof > 0.0))
    throw InvalidInputError("chi2_quantile: bad arguments");
  // bisection on P(dof/2, x/2), bracketed then bisected to 1e-12 relative
  double lo = 0.0, hi = std::max(dof, 1.0);
  while (gamma_p(dof / 2.0, hi / 2.0) < prob) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gamma_p(dof / 2.0, mid / 2.0) < prob)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace knockoff
