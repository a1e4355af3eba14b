#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "knockoff/common.hpp"
#include "knockoff/special.hpp"

#include <cmath>

using namespace knockoff;

namespace {
constexpr double kPi = 3.14159265358979323846;

// independent bivariate-normal CDF oracle through the conditioning identity
// Phi2(h,k,rho) = Int_{-inf}^{h} phi(x) Phi((k - rho x)/sqrt(1-rho^2)) dx
double bvn_oracle(double h, double k, double rho) {
  auto nodes = gauss_legendre(400, -9.0, h);
  double s = 0.0;
  double denom = std::sqrt(1.0 - rho * rho);
  for (const auto& [x, w] : nodes)
    s += w * normal_pdf(x) * normal_cdf((k - rho * x) / denom);
  return s;
}
}  // namespace

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-10));
  for (double u = 0.0005; u < 1.0; u += 0.0101)
    CHECK(normal_cdf(normal_quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(-0.1), InvalidInputError);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  auto nodes = gauss_legendre(8, 0.0, 1.0);
  for (int k = 0; k <= 15; ++k) {
    double s = 0.0;
    for (const auto& [x, w] : nodes) s += w * std::pow(x, k);
    CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  }
}

TEST_CASE("bivariate normal cdf closed-form identity at the origin") {
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.7, 0.95}) {
    double expected = 0.25 + std::asin(rho) / (2.0 * kPi);
    CHECK(bvn_cdf(0.0, 0.0, rho) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("bivariate normal cdf against the conditioning-identity oracle") {
  for (double rho : {-0.8, -0.3, 0.2, 0.5, 0.9}) {
    for (double h : {-1.5, -0.2, 0.8, 2.1}) {
      for (double k : {-2.0, 0.1, 1.3}) {
        CHECK(bvn_cdf(h, k, rho) ==
              doctest::Approx(bvn_oracle(h, k, rho)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("bivariate normal cdf structure") {
  CHECK(bvn_cdf(0.7, -0.4, 0.0) ==
        doctest::Approx(normal_cdf(0.7) * normal_cdf(-0.4)).epsilon(1e-14));
  // symmetry is bit-exact by argument ordering
  CHECK(bvn_cdf(1.3, -0.2, 0.6) == bvn_cdf(-0.2, 1.3, 0.6));
  double inf = std::numeric_limits<double>::infinity();
  CHECK(bvn_cdf(0.9, inf, 0.5) == doctest::Approx(normal_cdf(0.9)).epsilon(1e-14));
  CHECK(bvn_cdf(-inf, 0.3, 0.5) == 0.0);
  CHECK(bvn_cdf(0.4, 0.9, 1.0) == doctest::Approx(normal_cdf(0.4)).epsilon(1e-14));
}

TEST_CASE("incomplete gamma") {
  for (double x : {0.1, 0.7, 2.0, 9.0})
    CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
  for (double x : {0.2, 1.0, 4.0})
    CHECK(gamma_p(0.5, x) ==
          doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_p(-1.0, 1.0), InvalidInputError);
}

TEST_CASE("chi-square quantile") {
  CHECK(chi2_quantile(0.95, 1.0) ==
        doctest::Approx(3.841458820694124).epsilon(1e-9));
  CHECK(chi2_quantile(0.99, 5.0) ==
        doctest::Approx(15.08627246938899).epsilon(1e-9));
}

TEST_CASE("incomplete beta and student t") {
  for (double x = 0.05; x < 1.0; x += 0.1) {
    CHECK(inc_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(inc_beta(2.0, 2.0, x) ==
          doctest::Approx(3.0 * x * x - 2.0 * x * x * x).epsilon(1e-12));
  }
  CHECK(student_t_cdf(0.0, 7.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(student_t_cdf(1.8124611228107335, 10.0) ==
        doctest::Approx(0.95).epsilon(1e-10));
  // t with one degree of freedom is Cauchy
  CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-10));
}
