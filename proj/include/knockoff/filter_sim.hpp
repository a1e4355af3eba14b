#ifndef KNOCKOFF_FILTER_SIM_HPP
#define KNOCKOFF_FILTER_SIM_HPP

#include "knockoff/common.hpp"

#include <functional>
#include <vector>

namespace knockoff {

// Marginal-correlation difference statistic
// W_j = |corr(x_j, y)| - |corr(xt_j, y)|; antisymmetric under swapping a
// column with its knockoff.
Vec compute_w_statistics(const Mat& x, const Mat& xt, const Vec& y);

struct ThresholdResult {
  double tau = 0.0;                // +inf when no candidate qualifies
  std::vector<int> selected;       // 0-based indices with W_j >= tau
};

// knockoff(+) threshold: tau = min{ t in |W|, t > 0 :
//   (plus + #{W_j <= -t}) / max(1, #{W_j >= t}) <= q }.
ThresholdResult knockoff_threshold(const Vec& w, double q, bool plus = true);

struct RegressionScenario {
  int n_obs = 0;
  int p = 0;
  Vec beta;
  double noise_sd = 1.0;
  double q = 0.2;
  bool plus = true;

  std::vector<int> nonnull_set() const;
  void validate() const;
};

// Draws the covariate matrix and its knockoff copy for one replicate.
using CovariateSampler = std::function<std::pair<Mat, Mat>(int, Engine&)>;

struct FdrReport {
  double fdr = 0.0;
  double fdr_se = 0.0;
  double power = 0.0;
  double power_se = 0.0;
  int n_reps = 0;
  double mean_selected = 0.0;
};

// Monte Carlo FDR/power of the filter: per replicate, draw covariates and
// knockoffs, y = X beta + noise, compute W and the threshold, record
// FDP = |selected & null| / max(1, |selected|) and TPP.
FdrReport fdr_simulation(const RegressionScenario& scenario,
                         const CovariateSampler& draw_covariates, int n_reps,
                         std::uint64_t seed);

}  // namespace knockoff

#endif  // KNOCKOFF_FILTER_SIM_HPP
