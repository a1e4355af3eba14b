#include "knockoff/diagnostics.hpp"

#include "knockoff/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace knockoff {

namespace {

// condensed upper-triangular index for i < j in an N-point set
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

double group_pair_sum(const std::vector<float>& dist,
                      const std::vector<int>& group, std::size_t n) {
  double sum = 0.0;
  for (std::size_t a = 0; a < group.size(); ++a) {
    std::size_t i = group[a];
    const float* row = dist.data() + pair_index(i, i + 1, n);
    for (std::size_t b = a + 1; b < group.size(); ++b)
      sum += row[group[b] - i - 1];
  }
  return sum;
}

}  // namespace

double swap_test_energy(const Mat& samples, const SwapSet& s,
                        int n_permutations, std::uint64_t seed, int max_rows) {
  if (samples.rows() < 100)
    throw InvalidInputError("swap_test_energy: need at least 100 rows");
  if (samples.cols() != 2 * s.p)
    throw InvalidInputError("swap_test_energy: samples are not 2p columns");
  if (n_permutations < 19)
    throw InvalidInputError("swap_test_energy: too few permutations");

  Engine eng = make_engine(seed);

  // optional seeded subsample to keep the distance matrix tractable
  Mat work;
  if (samples.rows() > max_rows) {
    std::vector<int> rows(samples.rows());
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), eng);
    work.resize(max_rows, samples.cols());
    for (int i = 0; i < max_rows; ++i) work.row(i) = samples.row(rows[i]);
  } else {
    work = samples;
  }

  const std::size_t m = static_cast<std::size_t>(work.rows()) / 2;
  const std::size_t n = 2 * m;
  const int dim = static_cast<int>(work.cols());

  // halves: rows [0, m) as-is, rows [m, 2m) swapped by f_S
  Mat pooled(n, dim);
  pooled.topRows(m) = work.topRows(m);
  for (std::size_t r = 0; r < m; ++r) {
    Vec row = work.row(m + r);
    apply_swap_in_place(row, s);
    pooled.row(m + r) = row;
  }

  std::vector<float> dist(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t base = pair_index(i, i + 1, n);
    for (std::size_t j = i + 1; j < n; ++j)
      dist[base + (j - i - 1)] =
          static_cast<float>((pooled.row(i) - pooled.row(j)).norm());
  }

  std::vector<int> group_a(m), group_b(m);
  std::iota(group_a.begin(), group_a.end(), 0);
  std::iota(group_b.begin(), group_b.end(), static_cast<int>(m));

  // with equal group sizes the energy statistic is a decreasing affine
  // function of the within-group pair sum, so compare within sums directly
  double within_obs =
      group_pair_sum(dist, group_a, n) + group_pair_sum(dist, group_b, n);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int count_ge = 0;
  std::vector<int> ga(m), gb(m);
  for (int rep = 0; rep < n_permutations; ++rep) {
    std::shuffle(perm.begin(), perm.end(), eng);
    std::copy(perm.begin(), perm.begin() + m, ga.begin());
    std::copy(perm.begin() + m, perm.end(), gb.begin());
    std::sort(ga.begin(), ga.end());
    std::sort(gb.begin(), gb.end());
    double within =
        group_pair_sum(dist, ga, n) + group_pair_sum(dist, gb, n);
    // larger energy statistic <=> smaller within sum
    if (within <= within_obs) ++count_ge;
  }
  return (1.0 + count_ge) / (n_permutations + 1.0);
}

PmfSwapReport swap_test_exact_pmf(
    const std::function<double(const std::vector<int>&)>& pmf, int p,
    const std::vector<std::pair<int, int>>& ranges, long long guard) {
  if (ranges.size() != static_cast<std::size_t>(2 * p))
    throw InvalidInputError("swap_test_exact_pmf: need 2p ranges");
  long long points = 1;
  for (const auto& [lo, hi] : ranges) {
    if (hi < lo) throw InvalidInputError("swap_test_exact_pmf: bad range");
    points *= (hi - lo + 1);
    if (points > guard)
      throw ResourceLimitError("swap_test_exact_pmf: grid exceeds guard");
  }
  auto swaps = enumerate_swaps(p);

  PmfSwapReport report;
  std::vector<int> y(2 * p), yswap(2 * p);
  for (long long flat = 0; flat < points; ++flat) {
    long long rem = flat;
    for (int i = 2 * p - 1; i >= 0; --i) {
      int span = ranges[i].second - ranges[i].first + 1;
      y[i] = ranges[i].first + static_cast<int>(rem % span);
      rem /= span;
    }
    double v = pmf(y);
    for (const auto& s : swaps) {
      if (s.is_identity()) continue;
      yswap = y;
      for (int i = 0; i < p; ++i)
        if (s.contains(i + 1)) std::swap(yswap[i], yswap[p + i]);
      double dev = std::abs(v - pmf(yswap));
      if (dev > report.max_deviation) {
        report.max_deviation = dev;
        report.witness = y;
        report.worst_swap = s;
      }
    }
  }
  return report;
}

namespace {

double ks_statistic(Vec column, const std::function<double(double)>& cdf) {
  std::sort(column.begin(), column.end());
  const int n = static_cast<int>(column.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    double f = cdf(column[i]);
    d = std::max(d, std::abs((i + 1.0) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace

std::vector<MarginalTestRow> marginal_preservation_test(
    const Mat& samples, const std::vector<MarginalReference>& refs,
    double alpha) {
  const int p = static_cast<int>(refs.size());
  if (samples.cols() != 2 * p)
    throw InvalidInputError(
        "marginal_preservation_test: need one reference per coordinate");
  const long n = samples.rows();
  if (n < 10) throw InvalidInputError("marginal_preservation_test: too few rows");

  std::vector<MarginalTestRow> rows;
  for (int block = 0; block < 2; ++block) {
    for (int j = 0; j < p; ++j) {
      const MarginalReference& ref = refs[j];
      MarginalTestRow row;
      row.coord = j + 1;
      row.knockoff_block = (block == 1);
      Vec col = samples.col(block * p + j);
      if (!ref.is_discrete) {
        if (!ref.cdf)
          throw InvalidInputError("marginal_preservation_test: missing cdf");
        row.statistic = ks_statistic(col, ref.cdf);
        double c_alpha = std::sqrt(-0.5 * std::log(alpha / 2.0));
        row.critical = c_alpha / std::sqrt(static_cast<double>(n));
      } else {
        if (!ref.pmf)
          throw InvalidInputError("marginal_preservation_test: missing pmf");
        // chi-square on {lo..hi} plus an overflow bin
        const int bins = ref.hi - ref.lo + 1;
        std::vector<double> observed(bins + 1, 0.0);
        for (long r = 0; r < n; ++r) {
          int k = static_cast<int>(std::llround(col[r]));
          if (k >= ref.lo && k <= ref.hi)
            observed[k - ref.lo] += 1.0;
          else
            observed[bins] += 1.0;
        }
        double tail = 1.0;
        double stat = 0.0;
        int used = 0;
        for (int k = 0; k < bins; ++k) {
          double pk = ref.pmf(ref.lo + k);
          tail -= pk;
          double e = n * pk;
          if (e < 1e-9) continue;
          stat += (observed[k] - e) * (observed[k] - e) / e;
          ++used;
        }
        double e_tail = n * std::max(tail, 0.0);
        if (e_tail > 1e-9) {
          stat += (observed[bins] - e_tail) * (observed[bins] - e_tail) / e_tail;
          ++used;
        }
        row.statistic = stat;
        row.critical = chi2_quantile(1.0 - alpha, std::max(used - 1, 1));
      }
      row.pass = row.statistic <= row.critical;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

struct PairCovJackknife {
  double cov1 = 0.0, cov2 = 0.0, diff = 0.0, se = 0.0;
};

// cov(x, y1) - cov(x, y2) with a delete-1 jackknife SE, O(n)
PairCovJackknife cov_diff_jackknife(const Vec& x, const Vec& y1,
                                    const Vec& y2) {
  const long n = x.size();
  double sx = x.sum(), sy1 = y1.sum(), sy2 = y2.sum();
  double sxy1 = x.dot(y1), sxy2 = x.dot(y2);
  auto cov_full = [n](double sxy, double sx_, double sy_) {
    return (sxy - sx_ * sy_ / n) / (n - 1);
  };
  PairCovJackknife out;
  out.cov1 = cov_full(sxy1, sx, sy1);
  out.cov2 = cov_full(sxy2, sx, sy2);
  out.diff = out.cov1 - out.cov2;

  double mean_loo = 0.0;
  std::vector<double> loo(n);
  for (long r = 0; r < n; ++r) {
    double sxr = sx - x[r];
    double c1 = (sxy1 - x[r] * y1[r] - sxr * (sy1 - y1[r]) / (n - 1)) / (n - 2);
    double c2 = (sxy2 - x[r] * y2[r] - sxr * (sy2 - y2[r]) / (n - 1)) / (n - 2);
    loo[r] = c1 - c2;
    mean_loo += loo[r];
  }
  mean_loo /= n;
  double ss = 0.0;
  for (long r = 0; r < n; ++r) ss += (loo[r] - mean_loo) * (loo[r] - mean_loo);
  out.se = std::sqrt((n - 1.0) / n * ss);
  return out;
}

}  // namespace

CovConsistencyReport covariance_consistency(const Mat& samples) {
  if (samples.rows() < 1000)
    throw InvalidInputError("covariance_consistency: need at least 1000 rows");
  if (samples.cols() % 2 != 0)
    throw InvalidInputError("covariance_consistency: odd column count");
  const int p = static_cast<int>(samples.cols()) / 2;

  CovConsistencyReport report;
  report.pass = true;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      auto jk = cov_diff_jackknife(samples.col(i), samples.col(p + j),
                                   samples.col(j));
      CovConsistencyRow row;
      row.i = i + 1;
      row.j = j + 1;
      row.cov_x_xt = jk.cov1;
      row.cov_x_x = jk.cov2;
      row.diff = jk.diff;
      row.se = jk.se;
      row.gated = (i != j);
      row.pass = !row.gated || std::abs(row.diff) <= 4.0 * row.se;
      if (row.gated) report.pass = report.pass && row.pass;
      report.rows.push_back(row);
    }
  }
  return report;
}

namespace {

// merge sort counting exchanges
long long merge_count(std::vector<double>& v, std::vector<double>& buf,
                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = (lo + hi) / 2;
  long long count = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      buf[k++] = v[j++];
      count += static_cast<long long>(mid - i);
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return count;
}

}  // namespace

double kendall_tau(const Vec& x, const Vec& y) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  if (y.size() != static_cast<Eigen::Index>(n) || n < 2)
    throw InvalidInputError("kendall_tau: bad input lengths");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const double tot = 0.5 * n * (n - 1.0);
  // ties in x and joint ties, scanning runs of equal x
  double ties_x = 0.0, ties_xy = 0.0;
  std::size_t run = 1, run_xy = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[order[i]] == x[order[i - 1]]) {
      ++run;
      if (y[order[i]] == y[order[i - 1]])
        ++run_xy;
      else {
        ties_xy += 0.5 * run_xy * (run_xy - 1.0);
        run_xy = 1;
      }
    } else {
      ties_x += 0.5 * run * (run - 1.0);
      ties_xy += 0.5 * run_xy * (run_xy - 1.0);
      run = 1;
      run_xy = 1;
    }
  }
  ties_x += 0.5 * run * (run - 1.0);
  ties_xy += 0.5 * run_xy * (run_xy - 1.0);

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  long long exchanges = merge_count(ys, buf, 0, n);

  // ties in y after the full sort
  double ties_y = 0.0;
  run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (ys[i] == ys[i - 1])
      ++run;
    else {
      ties_y += 0.5 * run * (run - 1.0);
      run = 1;
    }
  }
  ties_y += 0.5 * run * (run - 1.0);

  double num = tot - ties_x - ties_y + ties_xy - 2.0 * exchanges;
  double den = std::sqrt((tot - ties_x) * (tot - ties_y));
  if (den == 0.0) throw DegenerateError("kendall_tau: constant input");
  return num / den;
}

}  // namespace knockoff
