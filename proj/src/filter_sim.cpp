#include "knockoff/filter_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace knockoff {

namespace {

Vec standardized_abs_corr(const Mat& m, const Vec& yc, double ysd) {
  const long n = m.rows();
  Vec out(m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    double mean = m.col(j).mean();
    Vec c = m.col(j).array() - mean;
    double sd = std::sqrt(c.squaredNorm() / (n - 1.0));
    if (!(sd > 0.0))
      throw DegenerateError("compute_w_statistics: zero-variance column");
    out[j] = std::abs(c.dot(yc) / ((n - 1.0) * sd * ysd));
  }
  return out;
}

}  // namespace

Vec compute_w_statistics(const Mat& x, const Mat& xt, const Vec& y) {
  if (x.rows() != xt.rows() || x.cols() != xt.cols() || y.size() != x.rows())
    throw InvalidInputError("compute_w_statistics: dimension mismatch");
  if (x.rows() < 3)
    throw InvalidInputError("compute_w_statistics: too few observations");
  const long n = x.rows();
  double ymean = y.mean();
  Vec yc = y.array() - ymean;
  double ysd = std::sqrt(yc.squaredNorm() / (n - 1.0));
  if (!(ysd > 0.0))
    throw DegenerateError("compute_w_statistics: zero-variance response");
  Vec cx = standardized_abs_corr(x, yc, ysd);
  Vec cxt = standardized_abs_corr(xt, yc, ysd);
  return cx - cxt;
}

ThresholdResult knockoff_threshold(const Vec& w, double q, bool plus) {
  if (!(q > 0.0 && q < 1.0))
    throw InvalidInputError("knockoff_threshold: q must be in (0,1)");
  const double offset = plus ? 1.0 : 0.0;

  std::vector<double> candidates;
  for (int j = 0; j < w.size(); ++j)
    if (std::abs(w[j]) > 0.0) candidates.push_back(std::abs(w[j]));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  ThresholdResult result;
  result.tau = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    long neg = 0, pos = 0;
    for (int j = 0; j < w.size(); ++j) {
      if (w[j] <= -t) ++neg;
      if (w[j] >= t) ++pos;
    }
    double ratio = (offset + neg) / std::max<long>(1, pos);
    if (ratio <= q) {
      result.tau = t;
      break;
    }
  }
  if (std::isfinite(result.tau))
    for (int j = 0; j < w.size(); ++j)
      if (w[j] >= result.tau) result.selected.push_back(j);
  return result;
}

std::vector<int> RegressionScenario::nonnull_set() const {
  std::vector<int> out;
  for (int j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) out.push_back(j);
  return out;
}

void RegressionScenario::validate() const {
  if (n_obs < 4 || p < 1)
    throw InvalidInputError("RegressionScenario: bad dimensions");
  if (beta.size() != p)
    throw InvalidInputError("RegressionScenario: beta length != p");
  if (!(noise_sd > 0.0))
    throw InvalidInputError("RegressionScenario: noise_sd must be positive");
  if (!(q > 0.0 && q < 1.0))
    throw InvalidInputError("RegressionScenario: q must be in (0,1)");
}

FdrReport fdr_simulation(const RegressionScenario& scenario,
                         const CovariateSampler& draw_covariates, int n_reps,
                         std::uint64_t seed) {
  scenario.validate();
  if (n_reps < 2) throw InvalidInputError("fdr_simulation: n_reps too small");

  std::vector<bool> is_null(scenario.p, true);
  int n_nonnull = 0;
  for (int j : scenario.nonnull_set()) {
    is_null[j] = false;
    ++n_nonnull;
  }

  double sum_fdp = 0.0, sumsq_fdp = 0.0;
  double sum_tpp = 0.0, sumsq_tpp = 0.0;
  double sum_sel = 0.0;
  for (int rep = 0; rep < n_reps; ++rep) {
    Engine eng = make_engine(seed, rep);
    auto [x, xt] = draw_covariates(scenario.n_obs, eng);
    if (x.rows() != scenario.n_obs || x.cols() != scenario.p ||
        xt.rows() != scenario.n_obs || xt.cols() != scenario.p)
      throw InvalidInputError("fdr_simulation: covariate sampler shape");

    std::normal_distribution<double> gauss(0.0, scenario.noise_sd);
    Vec y = x * scenario.beta;
    for (int i = 0; i < scenario.n_obs; ++i) y[i] += gauss(eng);

    Vec w = compute_w_statistics(x, xt, y);
    auto sel = knockoff_threshold(w, scenario.q, scenario.plus);

    long false_sel = 0, true_sel = 0;
    for (int j : sel.selected) {
      if (is_null[j])
        ++false_sel;
      else
        ++true_sel;
    }
    double fdp =
        static_cast<double>(false_sel) /
        std::max<std::size_t>(std::size_t{1}, sel.selected.size());
    double tpp = (n_nonnull > 0)
                     ? static_cast<double>(true_sel) / n_nonnull
                     : 0.0;
    sum_fdp += fdp;
    sumsq_fdp += fdp * fdp;
    sum_tpp += tpp;
    sumsq_tpp += tpp * tpp;
    sum_sel += static_cast<double>(sel.selected.size());
  }

  FdrReport report;
  report.n_reps = n_reps;
  report.fdr = sum_fdp / n_reps;
  report.power = sum_tpp / n_reps;
  report.mean_selected = sum_sel / n_reps;
  double var_fdp = (sumsq_fdp - n_reps * report.fdr * report.fdr) / (n_reps - 1);
  double var_tpp =
      (sumsq_tpp - n_reps * report.power * report.power) / (n_reps - 1);
  report.fdr_se = std::sqrt(std::max(var_fdp, 0.0) / n_reps);
  report.power_se = std::sqrt(std::max(var_tpp, 0.0) / n_reps);
  return report;
}

}  // namespace knockoff
