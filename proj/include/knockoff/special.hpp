#ifndef KNOCKOFF_SPECIAL_HPP
#define KNOCKOFF_SPECIAL_HPP

#include <utility>
#include <vector>

namespace knockoff {

// Standard normal CDF/pdf and quantile (quantile is refined to ~1 ulp).
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double u);

// Bivariate standard normal CDF P(X <= h, Y <= k) with correlation rho.
// Gauss-Legendre quadrature of the Drezner arcsine identity; symmetric in
// (h, k) bit-for-bit.
double bvn_cdf(double h, double k, double rho);

// Regularized incomplete gamma P(a, x) (lower) and Q(a, x) = 1 - P.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b).
double inc_beta(double a, double b, double x);

// Student-t CDF with nu degrees of freedom.
double student_t_cdf(double x, double nu);

// Chi-square quantile (inverse of gamma_p in x for a = k/2).
double chi2_quantile(double prob, double dof);

// Nodes and weights for n-point Gauss-Legendre quadrature on [a, b].
std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b);

}  // namespace knockoff

#endif  // KNOCKOFF_SPECIAL_HPP
