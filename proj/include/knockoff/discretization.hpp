#ifndef KNOCKOFF_DISCRETIZATION_HPP
#define KNOCKOFF_DISCRETIZATION_HPP

#include "knockoff/common.hpp"

namespace knockoff {

struct DiscretizationLevel {
  int n = 1;
  explicit DiscretizationLevel(int n_) : n(n_) {
    if (n < 1) throw InvalidInputError("DiscretizationLevel: n must be >= 1");
  }
};

// X^{(n)}_i = (floor(n x_i) + U_i) / n with U_i i.i.d. uniform(0,1);
// stays inside the 1/n cell of x.
Vec discretize(const Vec& x, DiscretizationLevel level, Engine& eng);
Vec discretize(const Vec& x, DiscretizationLevel level, std::uint64_t seed);

// Exact knockoff of the discretized vector: same cell, fresh uniforms.
// Asserts |x_i - xt_i| < 1/n on every draw.
Vec knockoff_of_discretized(const Vec& x, DiscretizationLevel level,
                            Engine& eng);
Vec knockoff_of_discretized(const Vec& x, DiscretizationLevel level,
                            std::uint64_t seed);

// Half L1 distance between normalized histograms of two sample sets on a
// shared bounding box.
double empirical_tv(const Mat& samples_a, const Mat& samples_b,
                    int bins_per_axis, long long guard = 10'000'000);

struct TvEstimate {
  double tv = 0.0;
  double bootstrap_se = 0.0;
};

// empirical_tv plus a row-resampling bootstrap standard error
TvEstimate empirical_tv_bootstrap(const Mat& samples_a, const Mat& samples_b,
                                  int bins_per_axis, int n_boot,
                                  std::uint64_t seed,
                                  long long guard = 10'000'000);

}  // namespace knockoff

#endif  // KNOCKOFF_DISCRETIZATION_HPP
