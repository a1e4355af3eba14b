#ifndef KNOCKOFF_SWAP_GROUP_HPP
#define KNOCKOFF_SWAP_GROUP_HPP

#include "knockoff/common.hpp"

#include <functional>
#include <vector>

namespace knockoff {

// The group F of coordinate-swap maps on R^{2p}: f_S exchanges x_i and
// x_{p+i} for each i in S. Members are stored as a bitmask (bit i-1 <=> i).
struct SwapSet {
  int p = 0;
  std::uint64_t mask = 0;

  SwapSet() = default;
  SwapSet(int p_, std::uint64_t mask_);
  static SwapSet from_indices(int p, const std::vector<int>& members);

  bool contains(int i) const { return i >= 1 && i <= p && (mask >> (i - 1)) & 1ULL; }
  std::vector<int> members() const;
  bool is_identity() const { return mask == 0; }
  // group operation: f_S o f_T = f_{S symdiff T}
  SwapSet compose(const SwapSet& other) const;
};

Vec apply_swap(const Vec& x, const SwapSet& s);
void apply_swap_in_place(Vec& x, const SwapSet& s);

// All 2^p swap sets in binary-counter order on the membership bitmask.
std::vector<SwapSet> enumerate_swaps(int p, int guard = 20);

enum class MeasureFactor { Lebesgue, Counting };

// A density on R^{2p} w.r.t. a product dominating measure whose factor p+i
// equals factor i.
struct Density2p {
  int p = 0;
  std::function<double(const Vec&)> eval;
  std::vector<MeasureFactor> factors;  // size 2p

  Density2p() = default;
  Density2p(int p_, std::function<double(const Vec&)> eval_,
            std::vector<MeasureFactor> factors_);
  static Density2p lebesgue(int p, std::function<double(const Vec&)> eval);
};

// q(x) = 2^{-p} sum_{f in F} g(f(x)); F-invariant by construction.
Density2p symmetrize_density(const Density2p& g, int guard = 20);

struct OrbitCheckReport {
  double max_deviation = 0.0;
  bool pass = false;
  Vec worst_point;
};

// Theorem-2.2(b) style check: max over points of |2^{-p} sum_f q(f(x)) - 1|.
OrbitCheckReport orbit_normalization_check(
    const std::function<double(const Vec&)>& q_over_lambda, int p,
    const std::vector<Vec>& points, double tol);

// q(x) = 2^p phi(x) / sum_{g in F} phi(g(x)) for strictly positive phi.
std::function<double(const Vec&)> tilt_density(
    std::function<double(const Vec&)> phi, int p);

using PointSampler = std::function<Vec(Engine&)>;

// Exact sampler for pi(dx) = q(x) lambda(dx) with q from tilt_density:
// rejection from lambda with acceptance phi(x)/sum_g phi(g(x)) <= 1.
PointSampler make_tilted_sampler(PointSampler lambda_sampler,
                                 std::function<double(const Vec&)> phi, int p);

struct InvariantAgreementRow {
  double mean_pi = 0.0;
  double mean_lambda = 0.0;
  double diff = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct InvariantAgreementReport {
  std::vector<InvariantAgreementRow> rows;
  bool pass = false;
};

// Theorem-2.2(c) check on user-supplied swap-symmetric statistics: compares
// E_pi[g] and E_lambda[g] by Monte Carlo, flagging differences beyond 4 SE.
// Each test function is spot-checked for F-invariance on random points first.
InvariantAgreementReport invariant_event_agreement(
    const PointSampler& sampler_pi, const PointSampler& sampler_lambda,
    const std::vector<std::function<double(const Vec&)>>& test_functions,
    int p, int n, std::uint64_t seed);

}  // namespace knockoff

#endif  // KNOCKOFF_SWAP_GROUP_HPP
