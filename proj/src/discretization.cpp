#include "knockoff/discretization.hpp"

#include <cmath>
#include <vector>

namespace knockoff {

namespace {

Vec cell_uniform(const Vec& x, int n, Engine& eng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    double u = unif(eng);
    while (u == 0.0) u = unif(eng);  // open interval (0,1)
    out[i] = (std::floor(n * x[i]) + u) / n;
  }
  return out;
}

}  // namespace

Vec discretize(const Vec& x, DiscretizationLevel level, Engine& eng) {
  return cell_uniform(x, level.n, eng);
}

Vec discretize(const Vec& x, DiscretizationLevel level, std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return discretize(x, level, eng);
}

Vec knockoff_of_discretized(const Vec& x, DiscretizationLevel level,
                            Engine& eng) {
  Vec xt = cell_uniform(x, level.n, eng);
  for (int i = 0; i < x.size(); ++i)
    if (!(std::abs(x[i] - xt[i]) < 1.0 / level.n))
      throw NumericError("knockoff_of_discretized: draw left the 1/n cell");
  return xt;
}

Vec knockoff_of_discretized(const Vec& x, DiscretizationLevel level,
                            std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return knockoff_of_discretized(x, level, eng);
}

namespace {

struct HistogramGrid {
  Vec lo, hi;
  int bins;
  int dims;

  long long cell_of(const Mat& m, int row) const {
    long long idx = 0;
    for (int j = 0; j < dims; ++j) {
      double w = (hi[j] - lo[j]) / bins;
      int b = (w > 0.0) ? static_cast<int>((m(row, j) - lo[j]) / w) : 0;
      b = std::max(0, std::min(b, bins - 1));
      idx = idx * bins + b;
    }
    return idx;
  }
};

HistogramGrid shared_grid(const Mat& a, const Mat& b, int bins,
                          long long guard) {
  if (a.rows() < 1 || b.rows() < 1)
    throw InvalidInputError("empirical_tv: empty sample set");
  if (a.cols() != b.cols())
    throw InvalidInputError("empirical_tv: dimension mismatch");
  if (bins < 1) throw InvalidInputError("empirical_tv: bins must be >= 1");
  const int dims = static_cast<int>(a.cols());
  long long cells = 1;
  for (int j = 0; j < dims; ++j) {
    cells *= bins;
    if (cells > guard)
      throw ResourceLimitError("empirical_tv: histogram exceeds guard");
  }
  HistogramGrid g;
  g.bins = bins;
  g.dims = dims;
  g.lo.resize(dims);
  g.hi.resize(dims);
  for (int j = 0; j < dims; ++j) {
    double lo = std::min(a.col(j).minCoeff(), b.col(j).minCoeff());
    double hi = std::max(a.col(j).maxCoeff(), b.col(j).maxCoeff());
    if (hi <= lo) hi = lo + 1.0;
    double pad = 1e-9 * (hi - lo);
    g.lo[j] = lo - pad;
    g.hi[j] = hi + pad;
  }
  return g;
}

double tv_on_grid(const HistogramGrid& g, const Mat& a, const Mat& b,
                  const std::vector<int>& rows_a,
                  const std::vector<int>& rows_b) {
  long long cells = 1;
  for (int j = 0; j < g.dims; ++j) cells *= g.bins;
  std::vector<double> ha(static_cast<std::size_t>(cells), 0.0);
  std::vector<double> hb(static_cast<std::size_t>(cells), 0.0);
  for (int r : rows_a) ha[static_cast<std::size_t>(g.cell_of(a, r))] += 1.0;
  for (int r : rows_b) hb[static_cast<std::size_t>(g.cell_of(b, r))] += 1.0;
  double na = static_cast<double>(rows_a.size());
  double nb = static_cast<double>(rows_b.size());
  double sum = 0.0;
  for (long long c = 0; c < cells; ++c)
    sum += std::abs(ha[static_cast<std::size_t>(c)] / na -
                    hb[static_cast<std::size_t>(c)] / nb);
  return 0.5 * sum;
}

}  // namespace

double empirical_tv(const Mat& samples_a, const Mat& samples_b,
                    int bins_per_axis, long long guard) {
  HistogramGrid g = shared_grid(samples_a, samples_b, bins_per_axis, guard);
  std::vector<int> ra(samples_a.rows()), rb(samples_b.rows());
  for (int i = 0; i < samples_a.rows(); ++i) ra[i] = i;
  for (int i = 0; i < samples_b.rows(); ++i) rb[i] = i;
  return tv_on_grid(g, samples_a, samples_b, ra, rb);
}

TvEstimate empirical_tv_bootstrap(const Mat& samples_a, const Mat& samples_b,
                                  int bins_per_axis, int n_boot,
                                  std::uint64_t seed, long long guard) {
  if (n_boot < 2)
    throw InvalidInputError("empirical_tv_bootstrap: n_boot too small");
  HistogramGrid g = shared_grid(samples_a, samples_b, bins_per_axis, guard);
  std::vector<int> ra(samples_a.rows()), rb(samples_b.rows());
  for (int i = 0; i < samples_a.rows(); ++i) ra[i] = i;
  for (int i = 0; i < samples_b.rows(); ++i) rb[i] = i;
  TvEstimate out;
  out.tv = tv_on_grid(g, samples_a, samples_b, ra, rb);

  Engine eng = make_engine(seed);
  std::uniform_int_distribution<int> pick_a(0,
                                            static_cast<int>(ra.size()) - 1);
  std::uniform_int_distribution<int> pick_b(0,
                                            static_cast<int>(rb.size()) - 1);
  double sum = 0.0, sumsq = 0.0;
  std::vector<int> ba(ra.size()), bb(rb.size());
  for (int rep = 0; rep < n_boot; ++rep) {
    for (auto& r : ba) r = pick_a(eng);
    for (auto& r : bb) r = pick_b(eng);
    double tv = tv_on_grid(g, samples_a, samples_b, ba, bb);
    sum += tv;
    sumsq += tv * tv;
  }
  double mean = sum / n_boot;
  out.bootstrap_se =
      std::sqrt(std::max(sumsq / n_boot - mean * mean, 0.0) * n_boot /
                (n_boot - 1.0));
  return out;
}

}  // namespace knockoff
