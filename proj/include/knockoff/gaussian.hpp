#ifndef KNOCKOFF_GAUSSIAN_HPP
#define KNOCKOFF_GAUSSIAN_HPP

#include "knockoff/common.hpp"

namespace knockoff {

// Joint Gaussian knockoff model: (X, Xt) ~ N(0, G) with
// G = [[Sigma, Sigma - D], [Sigma - D, Sigma]], D = diag(d) >= 0.
struct GaussianModel {
  int p = 0;
  Mat sigma;
  Vec d;
  Mat g;  // 2p x 2p assembled joint covariance
};

// Equicorrelated diagonal rule: d_j = min(Sigma_jj, 2 lambda_min(corr) Sigma_jj).
Vec select_diag_equicorrelated(const Mat& sigma);

// Builds G and gates on positive semidefiniteness
// (min eig >= -1e-8 * max(1, trace(G)/2p)).
GaussianModel assemble_joint(const Mat& sigma, const Vec& d);

// n i.i.d. rows from N(0, G) via symmetric eigendecomposition with clipping
// of slightly negative eigenvalues. Fixed block size with per-block derived
// seeds keeps row order deterministic.
Mat sample_joint(const GaussianModel& model, int n, std::uint64_t seed);

// Draws Xt | X = x ~ N((Sigma-D) Sigma^{-1} x, Sigma - (Sigma-D) Sigma^{-1} (Sigma-D)).
// Factorizations are done once at construction.
class GaussianConditionalSampler {
 public:
  explicit GaussianConditionalSampler(const GaussianModel& model);
  Vec draw(const Vec& x, Engine& eng) const;
  const Mat& cond_mean_map() const { return a_; }
  const Mat& cond_cov() const { return cond_cov_; }

 private:
  int p_;
  Mat a_;         // (Sigma - D) Sigma^{-1}
  Mat cond_cov_;  // conditional covariance
  Mat factor_;    // square root of cond_cov_
};

Vec conditional_knockoff(const GaussianModel& model, const Vec& x,
                         std::uint64_t seed);

// Symmetric square root of a PSD matrix, clipping eigenvalues in
// [-1e-8 * scale, 0) to zero; more negative input is rejected. Eigenvalues
// below zero_floor are treated as exact zeros (degenerate directions).
Mat psd_sqrt(const Mat& cov, double zero_floor = 0.0);

// n x p standard-normal-driven draws from N(0, cov), single stream.
Mat sample_mvn(const Mat& cov, int n, Engine& eng);

}  // namespace knockoff

#endif  // KNOCKOFF_GAUSSIAN_HPP
