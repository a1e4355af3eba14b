#ifndef KNOCKOFF_MIXTURE_HPP
#define KNOCKOFF_MIXTURE_HPP

#include "knockoff/common.hpp"
#include "knockoff/swap_group.hpp"

#include <functional>
#include <string>
#include <vector>

namespace knockoff {

// One coordinate of a conjugate mixture: likelihood f_i(t, theta) with prior
// gamma_i on theta, plus the closed-form predictives the conjugacy gives.
struct CoordFamily {
  // prior predictive of the pair (y_i, y_{p+i})
  std::function<double(double, double)> pair_pred;
  // prior predictive of y_i
  std::function<double(double)> marg_pred;
  // conditional predictive of xt given x (the ratio pair/marg in closed form)
  std::function<double(double, double)> cond_pred;
  // prior-predictive CDF, when a closed form exists (continuous families)
  std::function<double(double)> marg_cdf;

  std::function<double(Engine&)> prior_draw;
  std::function<double(double, Engine&)> posterior_draw;  // given observation
  std::function<double(double, Engine&)> like_draw;       // given theta
  std::function<double(double, double)> like_pdf;         // (t, theta)
  std::function<double(double, double)> like_cdf;         // (t, theta)
  std::function<double(double)> prior_pdf;
  // theta integration interval enclosing the mass relevant to (y, yt)
  std::function<std::pair<double, double>(double, double)> quad_domain;

  bool discrete = false;
  bool theta_free_mean = false;
  double fixed_mean = 0.0;  // meaningful when theta_free_mean
};

class ConjugateFamily {
 public:
  enum class Kind { PoissonGamma, NormalNormal, NormalScale, Custom };

  ConjugateFamily(Kind kind, std::string name, std::vector<CoordFamily> coords);

  int p() const { return static_cast<int>(coords_.size()); }
  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool discrete() const { return coords_.front().discrete; }
  const CoordFamily& coord(int i) const { return coords_.at(i); }

 private:
  Kind kind_;
  std::string name_;
  std::vector<CoordFamily> coords_;
};

// Shipped families. Each factory runs the registration gate: the closed-form
// pair and marginal predictives are cross-validated against one-dimensional
// quadrature of the likelihood against the prior (1e-8), throwing
// ConstructionError on disagreement.
ConjugateFamily poisson_gamma_family(const Vec& a, const Vec& b);
ConjugateFamily normal_normal_family(const Vec& prior_mean,
                                     const Vec& prior_var, const Vec& obs_var);
// N(0, 1/theta) likelihood with Gamma(a, b) prior on the precision theta;
// the likelihood mean is theta-free, so knockoffs come out uncorrelated.
ConjugateFamily normal_scale_family(const Vec& a, const Vec& b);
// user-defined conjugate triples; the same gate is mandatory
ConjugateFamily custom_family(std::string name,
                              std::vector<CoordFamily> coords);

// q(y) = prod_i pair_pred_i(y_i, y_{p+i}); F-invariant by symmetry of each
// factor.
double knockoff_joint_density(const ConjugateFamily& family, const Vec& y);
// h(x) = prod_i marg_pred_i(x_i)
double marginal_density(const ConjugateFamily& family, const Vec& x);
// q(x, xt) / h(x); DegenerateError when h(x) = 0
double conditional_knockoff_density(const ConjugateFamily& family,
                                    const Vec& x, const Vec& xt);

// Exact conditional draw: theta ~ posterior(x) coordinatewise, then
// xt_i ~ likelihood(theta_i).
Vec sample_knockoff(const ConjugateFamily& family, const Vec& x, Engine& eng);
Vec sample_knockoff(const ConjugateFamily& family, const Vec& x,
                    std::uint64_t seed);

// n rows of (X, Xt): per row theta ~ prior, both blocks conditionally i.i.d.
Mat sample_joint_mixture(const ConjugateFamily& family, int n,
                         std::uint64_t seed);
// first block only
Mat sample_x_mixture(const ConjugateFamily& family, int n, std::uint64_t seed);

struct MixtureDensityBundle {
  Density2p q;
  std::function<double(const Vec&)> h;
};

MixtureDensityBundle density_bundle(const ConjugateFamily& family);

// closed product rectangle [lo_1,hi_1] x ... x [lo_p,hi_p]
struct Rectangle {
  Vec lo, hi;
};

struct EstimateWithSe {
  double estimate = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of
//   Int Q(A,t)Q(B,t) gamma(dt) - Int Q(A,t) gamma(dt) Int Q(B,t) gamma(dt)
// with a delta-method standard error.
EstimateWithSe dependence_gap(const ConjugateFamily& family,
                              const Rectangle& a, const Rectangle& b, int n,
                              std::uint64_t seed);

struct UncorrelatedRow {
  int coord = 0;
  double cov = 0.0;
  double se = 0.0;
  bool theta_free_mean = false;
  bool zero_within_4se = false;
};

// Estimates cov(X_i, Xt_i) per coordinate. Coordinates whose likelihood mean
// is theta-free must land within 4 SE of zero; others are reported unguarded.
std::vector<UncorrelatedRow> uncorrelated_check(const ConjugateFamily& family,
                                                int n, std::uint64_t seed);

}  // namespace knockoff

#endif  // KNOCKOFF_MIXTURE_HPP
