#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "knockoff/filter_sim.hpp"
#include "knockoff/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

using namespace knockoff;

namespace {

Vec make_w(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  int i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("w statistic flips sign exactly when a column pair is swapped") {
  Engine eng = make_engine(1);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 200, p = 4;
  Mat x(n, p), xt(n, p);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      x(i, j) = g(eng);
      xt(i, j) = g(eng);
    }
    y[i] = x(i, 0) + 0.5 * x(i, 2) + g(eng);
  }
  Vec w = compute_w_statistics(x, xt, y);

  Mat x2 = x, xt2 = xt;
  x2.col(1).swap(xt2.col(1));
  Vec w2 = compute_w_statistics(x2, xt2, y);
  CHECK(w2[1] == doctest::Approx(-w[1]).epsilon(1e-13));
  for (int j : {0, 2, 3}) CHECK(w2[j] == doctest::Approx(w[j]).epsilon(1e-13));

  Mat zero_col = x;
  zero_col.col(2).setConstant(3.0);
  CHECK_THROWS_AS(compute_w_statistics(zero_col, xt, y), DegenerateError);
}

TEST_CASE("w statistics are sign-balanced under a null response") {
  Engine eng = make_engine(2);
  std::normal_distribution<double> g(0.0, 1.0);
  const int reps = 200, n = 100, p = 10;
  long positive = 0, total = 0;
  for (int r = 0; r < reps; ++r) {
    Mat x(n, p), xt(n, p);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        x(i, j) = g(eng);
        xt(i, j) = g(eng);
      }
      y[i] = g(eng);  // independent of everything
    }
    Vec w = compute_w_statistics(x, xt, y);
    for (int j = 0; j < p; ++j) {
      if (w[j] > 0) ++positive;
      ++total;
    }
  }
  double frac = static_cast<double>(positive) / total;
  double se = 0.5 / std::sqrt(static_cast<double>(total));
  CHECK(std::abs(frac - 0.5) <= 4.0 * se);
}

TEST_CASE("knockoff threshold follows the displayed rule") {
  // candidates ascending: t = 1.5 is the first with
  // (1 + #{W <= -t}) / #{W >= t} <= q
  auto r1 = knockoff_threshold(make_w({3.0, 2.0, -1.0, -0.5, 1.5}), 0.5, true);
  CHECK(r1.tau == doctest::Approx(1.5));
  CHECK(r1.selected == std::vector<int>{0, 1, 4});

  auto r2 = knockoff_threshold(make_w({3.0, 2.0, 1.5, -0.5}), 0.8, true);
  CHECK(r2.tau == doctest::Approx(0.5));
  CHECK(r2.selected == std::vector<int>{0, 1, 2});

  // all W negative: no positives to select
  auto r3 = knockoff_threshold(make_w({-0.2, -3.0, -1.0}), 0.5, true);
  CHECK(std::isinf(r3.tau));
  CHECK(r3.selected.empty());

  CHECK_THROWS_AS(knockoff_threshold(make_w({1.0}), 1.5, true),
                  InvalidInputError);
}

TEST_CASE("plain knockoff selects at least as much as knockoff+") {
  Vec w = make_w({2.0, 1.2, 0.7, -0.4, -1.1, 0.9, 1.8, -0.2});
  for (double q : {0.1, 0.2, 0.4}) {
    auto plus = knockoff_threshold(w, q, true);
    auto plain = knockoff_threshold(w, q, false);
    CHECK(plain.selected.size() >= plus.selected.size());
  }
}

TEST_CASE("threshold is permutation-equivariant") {
  Engine eng = make_engine(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec w(12);
  for (int i = 0; i < 12; ++i) w[i] = g(eng);
  auto base = knockoff_threshold(w, 0.4, true);

  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), eng);
  Vec wp(12);
  for (int i = 0; i < 12; ++i) wp[perm[i]] = w[i];
  auto permuted = knockoff_threshold(wp, 0.4, true);

  CHECK(permuted.tau == base.tau);
  std::vector<int> mapped;
  for (int j : base.selected) mapped.push_back(perm[j]);
  std::sort(mapped.begin(), mapped.end());
  CHECK(permuted.selected == mapped);
}

namespace {

CovariateSampler gaussian_covariates(int p, double rho) {
  Mat sigma = Mat::Constant(p, p, rho);
  sigma.diagonal().setOnes();
  auto model = std::make_shared<GaussianModel>(
      assemble_joint(sigma, select_diag_equicorrelated(sigma)));
  auto cond = std::make_shared<GaussianConditionalSampler>(*model);
  Mat root = psd_sqrt(sigma);
  return [p, cond, root](int n, Engine& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat x(n, p), xt(n, p);
    for (int i = 0; i < n; ++i) {
      Vec z(p);
      for (int k = 0; k < p; ++k) z[k] = g(eng);
      Vec xi = root * z;
      x.row(i) = xi;
      xt.row(i) = cond->draw(xi, eng);
    }
    return std::make_pair(x, xt);
  };
}

}  // namespace

TEST_CASE("strong signal is selected with a positive w statistic") {
  auto draw = gaussian_covariates(5, 0.2);
  int positive = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    Engine eng = make_engine(400 + r);
    auto [x, xt] = draw(200, eng);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec y(200);
    for (int i = 0; i < 200; ++i) y[i] = 1.5 * x(i, 0) + g(eng);
    Vec w = compute_w_statistics(x, xt, y);
    if (w[0] > 0) ++positive;
  }
  CHECK(positive >= 95);
}

TEST_CASE("fdr control in a small gaussian scenario") {
  RegressionScenario sc;
  sc.n_obs = 150;
  sc.p = 10;
  sc.beta = Vec::Zero(10);
  sc.beta[0] = 0.8;
  sc.beta[3] = 0.8;
  sc.beta[7] = -0.8;
  sc.noise_sd = 1.0;
  sc.q = 0.3;
  auto report = fdr_simulation(sc, gaussian_covariates(10, 0.25), 100, 5);
  CHECK(report.fdr <= sc.q + 3.0 * report.fdr_se);
  CHECK(report.power > 0.1);  // sanity only; power is reported, not gated

  // all-null scenario keeps FDR under q as well
  RegressionScenario null_sc = sc;
  null_sc.beta = Vec::Zero(10);
  auto null_report =
      fdr_simulation(null_sc, gaussian_covariates(10, 0.25), 100, 6);
  CHECK(null_report.fdr <= null_sc.q + 3.0 * null_report.fdr_se);
  CHECK(null_report.power == 0.0);
}
