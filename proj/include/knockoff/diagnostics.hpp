#ifndef KNOCKOFF_DIAGNOSTICS_HPP
#define KNOCKOFF_DIAGNOSTICS_HPP

#include "knockoff/common.hpp"
#include "knockoff/swap_group.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace knockoff {

struct TestRecord {
  std::string test;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
  bool pass = false;
  std::uint64_t seed = 0;
  long n = 0;
};

struct DiagnosticsReport {
  std::vector<TestRecord> records;
  bool pass = false;

  void finalize() {
    pass = true;
    for (const auto& r : records) pass = pass && r.pass;
  }
};

// Energy-distance permutation test of f_S(X, Xt) ~ (X, Xt). The rows are
// split into halves, f_S is applied to one half, and group labels are
// permuted. Matrices beyond max_rows are subsampled (seeded) first.
double swap_test_energy(const Mat& samples, const SwapSet& s,
                        int n_permutations, std::uint64_t seed,
                        int max_rows = 5000);

struct PmfSwapReport {
  double max_deviation = 0.0;
  std::vector<int> witness;  // grid point achieving the max
  SwapSet worst_swap;
};

// Exact exchangeability of a pmf on a finite integer grid: max over all
// 2^p swaps and grid points of |pmf(y) - pmf(f_S(y))|.
PmfSwapReport swap_test_exact_pmf(
    const std::function<double(const std::vector<int>&)>& pmf, int p,
    const std::vector<std::pair<int, int>>& ranges,
    long long guard = 10'000'000);

// Reference marginal: a continuous CDF or a pmf on an integer range.
struct MarginalReference {
  std::string name;
  bool is_discrete = false;
  std::function<double(double)> cdf;  // continuous route
  std::function<double(int)> pmf;     // discrete route
  int lo = 0, hi = 0;                 // discrete support used for binning
};

struct MarginalTestRow {
  int coord = 0;            // 1-based
  bool knockoff_block = false;
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = false;
};

// Tests every coordinate of both blocks against its reference marginal:
// Kolmogorov-Smirnov for continuous references, exact chi-square binning for
// discrete ones. Critical values at the given alpha.
std::vector<MarginalTestRow> marginal_preservation_test(
    const Mat& samples, const std::vector<MarginalReference>& refs,
    double alpha = 0.01);

struct CovConsistencyRow {
  int i = 0, j = 0;  // 1-based
  double cov_x_xt = 0.0;
  double cov_x_x = 0.0;
  double diff = 0.0;
  double se = 0.0;  // jackknife
  bool gated = false;
  bool pass = false;
};

struct CovConsistencyReport {
  std::vector<CovConsistencyRow> rows;  // all ordered pairs incl. diagonal
  bool pass = false;                    // over gated rows (i != j) only
};

// Swap-invariance consequence cov(X_i, Xt_j) = cov(X_i, X_j) for i != j,
// gated at 4 jackknife SE; the diagonal is reported without a gate.
CovConsistencyReport covariance_consistency(const Mat& samples);

// Kendall tau-b in O(n log n) (merge-sort inversion counting).
double kendall_tau(const Vec& x, const Vec& y);

}  // namespace knockoff

#endif  // KNOCKOFF_DIAGNOSTICS_HPP
