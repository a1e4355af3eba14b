#ifndef KNOCKOFF_COPULA_HPP
#define KNOCKOFF_COPULA_HPP

#include "knockoff/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace knockoff {

// Archimedean generator psi: [0,inf) -> (0,1], continuous, strictly
// decreasing, psi(0) = 1, psi(inf) = 0.
struct ArchimedeanGenerator {
  std::string name;
  double theta = 0.0;
  std::function<double(double)> psi;
  std::function<double(double)> psi_inv;

  // closed-form sign of psi^{(k)} on (0,inf), when known
  std::function<int(int)> derivative_sign;
  // closed-form k-th derivative, when known (k = 0 gives psi itself)
  std::function<double(int, double)> psi_deriv;

  // sampler of the frailty V with Laplace transform psi, when available
  std::function<double(Engine&)> frailty_sampler;
  // log density of the frailty, when available (drives the generic grid
  // posterior sampler)
  std::function<double(double)> frailty_log_density;
  // exact conditional sampler of V given p observed uniforms with
  // sum_i psi_inv(u_i) = rate_sum (conjugate case)
  std::function<double(int, double, Engine&)> frailty_posterior_sampler;

  bool has_frailty() const { return static_cast<bool>(frailty_sampler); }
  bool has_exact_posterior() const {
    return static_cast<bool>(frailty_posterior_sampler);
  }
};

// Clayton: psi(t) = (1+t)^{-1/theta}, theta > 0; frailty Gamma(1/theta, 1)
// with conjugate Gamma posterior.
ArchimedeanGenerator clayton_generator(double theta);
// Gumbel: psi(t) = exp(-t^{1/theta}), theta >= 1; positive-stable frailty
// (no closed density; no exact posterior machinery).
ArchimedeanGenerator gumbel_generator(double theta);

struct GeneratorValidationReport {
  bool pass = false;
  double max_inverse_error = 0.0;
  double max_frailty_z = 0.0;  // max |MC - psi| / SE over the t grid
  std::string detail;
};

// Grid validation of the generator contract (monotonicity, range, inverse
// round-trip to 1e-12) plus, when a frailty sampler is present, a 4-SE
// Monte Carlo check of E[exp(-tV)] against psi(t). Throws InvalidInputError
// on structural violations.
GeneratorValidationReport validate_generator(const ArchimedeanGenerator& gen,
                                             std::uint64_t seed = 7);

// Univariate marginal: CDF plus generalized (left-continuous) inverse.
struct Marginal {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  std::function<double(double)> pdf;  // optional, used by the CDF oracle
};

Marginal uniform_marginal();
Marginal normal_marginal(double mu, double sd);

// Bivariate copulas used for the D_i links.
struct Copula2 {
  enum class Kind { Independence, CounterMonotone, Comonotone, Gaussian,
                    Archimedean };
  Kind kind = Kind::Independence;
  double rho = 0.0;                          // Gaussian
  std::shared_ptr<ArchimedeanGenerator> gen;  // Archimedean

  double eval(double u, double v) const;
  bool symmetric() const;
  static Copula2 independence();
  static Copula2 counter_monotone();
  static Copula2 comonotone();
  static Copula2 gaussian(double rho);
  static Copula2 archimedean(ArchimedeanGenerator g);
};

// p-variate copulas used for the outer C.
struct CopulaP {
  enum class Kind { Independence, Gaussian, Archimedean, Explicit };
  Kind kind = Kind::Independence;
  int p = 0;
  Mat corr;                                  // Gaussian
  std::shared_ptr<ArchimedeanGenerator> gen;  // Archimedean
  std::function<double(const Vec&)> fn;       // Explicit
  std::function<double(const Vec&)> density_fn;  // Explicit, optional

  double eval(const Vec& u) const;
  // density w.r.t. Lebesgue on [0,1]^p; throws UnsupportedModelError when no
  // closed form is available
  double density(const Vec& u) const;
  static CopulaP independence(int p);
  static CopulaP gaussian(const Mat& corr);
  static CopulaP archimedean(int p, ArchimedeanGenerator g);
  static CopulaP explicit_fn(int p, std::function<double(const Vec&)> fn,
                             std::function<double(const Vec&)> density = {});
};

struct CopulaModelSpec {
  int p = 0;
  CopulaP c;
  std::vector<Copula2> d;
  std::vector<Marginal> marginals;

  void validate() const;
  // true when C and every D_i are Archimedean with the same generator object
  bool common_generator() const;
};

// Builds the shared-generator Archimedean spec (C and all D_i use gen).
CopulaModelSpec archimedean_spec(int p, ArchimedeanGenerator gen,
                                 std::vector<Marginal> marginals);

// H(x) = C[D_1(F_1(x_1), F_1(x_{p+1})), ..., D_p(F_p(x_p), F_p(x_{2p}))].
double evaluate_h(const CopulaModelSpec& spec, const Vec& x);

struct RectangleVolumeReport {
  double min_volume = 0.0;
  std::vector<int> witness_cell;  // lower-corner grid index per axis
  Vec witness_lo, witness_hi;     // cell corners in u-coordinates
  int resolution = 0;
  bool nonnegative = false;       // min_volume >= -tol
  double tol = 0.0;
};

// Inclusion-exclusion volume of H over every cell of a regular grid on
// [0,1]^{2p} (u-scale; the monotone marginals make this equivalent to
// rectangles in x). Negative minimum = H is not a distribution function.
RectangleVolumeReport rectangle_volume_check(const CopulaModelSpec& spec,
                                             int grid_resolution,
                                             double tol = 1e-10,
                                             long long guard = 10'000'000);

struct DerivCheckEntry {
  int order = 0;
  double t = 0.0;
  int sign = 0;
  bool conclusive = false;
  bool ok = false;  // sign consistent with the required inequality
  double estimate = 0.0;
};

struct GeneratorConditionReport {
  bool pass = false;          // all entries conclusive and consistent
  bool inconclusive = false;  // at least one entry could not be certified
  std::vector<DerivCheckEntry> entries;
  std::string detail;
};

std::vector<double> default_t_grid();

// Complete-monotonicity check: (-1)^k psi^{(k)} >= 0 for k = 1..order.
// Uses the closed-form derivative sign when the generator carries one,
// otherwise adaptive central differences at two step sizes.
GeneratorConditionReport check_generator_conditions(
    const ArchimedeanGenerator& gen, int order,
    const std::vector<double>& t_grid = default_t_grid());

// Nested-generator admissibility: (-1)^k psi_i^{(k)} >= 0 and
// (-1)^{k-1} (psi^{-1} o psi_i)^{(k)} >= 0 for k = 1..order.
GeneratorConditionReport check_nested_condition(
    const ArchimedeanGenerator& psi_outer, const ArchimedeanGenerator& psi_i,
    int order, const std::vector<double>& t_grid = default_t_grid());

// Exact conditional knockoff draw in the shared-generator case: condition the
// frailty on U = F(x), then redraw the second block.
Vec sample_knockoff_frailty(const CopulaModelSpec& spec, const Vec& x,
                            Engine& eng);
Vec sample_knockoff_frailty(const CopulaModelSpec& spec, const Vec& x,
                            std::uint64_t seed);

// n rows of (X, Xt) from the joint law H = C*: one frailty draw per row,
// both blocks conditionally independent given it.
Mat sample_joint_frailty(const CopulaModelSpec& spec, int n,
                         std::uint64_t seed);

// Draws X alone (first block of the frailty construction).
Mat sample_x_frailty(const CopulaModelSpec& spec, int n, std::uint64_t seed);

// Slow finite-difference reference for P(Xt <= x_{p+1..2p} | X = x_{1..p});
// requires p <= 3, marginal densities, and a copula density for C.
double conditional_cdf_oracle(const CopulaModelSpec& spec, const Vec& x);

// Kendall tau of the bivariate Archimedean copula with this generator,
// computed by numeric quadrature of 1 + 4 Int_0^1 psi_inv(t)/(psi_inv)'(t) dt.
double kendall_tau_generator(const ArchimedeanGenerator& gen);

}  // namespace knockoff

#endif  // KNOCKOFF_COPULA_HPP
