#include "knockoff/swap_group.hpp"

#include <cmath>
#include <utility>

namespace knockoff {

SwapSet::SwapSet(int p_, std::uint64_t mask_) : p(p_), mask(mask_) {
  if (p < 1 || p > 63) throw InvalidInputError("SwapSet: p out of range");
  if (p < 64 && (mask >> p) != 0)
    throw InvalidInputError("SwapSet: members outside {1..p}");
}

SwapSet SwapSet::from_indices(int p, const std::vector<int>& members) {
  std::uint64_t mask = 0;
  for (int i : members) {
    if (i < 1 || i > p)
      throw InvalidInputError("SwapSet: member outside {1..p}");
    mask |= 1ULL << (i - 1);
  }
  return SwapSet(p, mask);
}

std::vector<int> SwapSet::members() const {
  std::vector<int> out;
  for (int i = 1; i <= p; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

SwapSet SwapSet::compose(const SwapSet& other) const {
  if (other.p != p) throw InvalidInputError("SwapSet: dimension mismatch");
  return SwapSet(p, mask ^ other.mask);
}

void apply_swap_in_place(Vec& x, const SwapSet& s) {
  if (x.size() != 2 * s.p)
    throw InvalidInputError("apply_swap: point dimension != 2p");
  for (int i = 0; i < s.p; ++i)
    if ((s.mask >> i) & 1ULL) std::swap(x[i], x[s.p + i]);
}

Vec apply_swap(const Vec& x, const SwapSet& s) {
  Vec y = x;
  apply_swap_in_place(y, s);
  return y;
}

std::vector<SwapSet> enumerate_swaps(int p, int guard) {
  if (p < 1) throw InvalidInputError("enumerate_swaps: p must be >= 1");
  if (p > guard)
    throw ResourceLimitError("enumerate_swaps: 2^p enumeration exceeds guard");
  std::vector<SwapSet> out;
  out.reserve(std::size_t{1} << p);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << p); ++m)
    out.emplace_back(p, m);
  return out;
}

Density2p::Density2p(int p_, std::function<double(const Vec&)> eval_,
                     std::vector<MeasureFactor> factors_)
    : p(p_), eval(std::move(eval_)), factors(std::move(factors_)) {
  if (p < 1) throw InvalidInputError("Density2p: p must be >= 1");
  if (factors.size() != static_cast<std::size_t>(2 * p))
    throw InvalidInputError("Density2p: dominating measure needs 2p factors");
  for (int i = 0; i < p; ++i)
    if (factors[i] != factors[p + i])
      throw InvalidInputError("Density2p: factor p+i must equal factor i");
}

Density2p Density2p::lebesgue(int p, std::function<double(const Vec&)> eval) {
  return Density2p(p, std::move(eval),
                   std::vector<MeasureFactor>(2 * p, MeasureFactor::Lebesgue));
}

Density2p symmetrize_density(const Density2p& g, int guard) {
  if (!g.eval) throw InvalidInputError("symmetrize_density: missing eval");
  auto swaps = enumerate_swaps(g.p, guard);
  const double scale = std::ldexp(1.0, -g.p);  // 2^{-p}
  auto base = g.eval;
  auto eval = [swaps, scale, base](const Vec& x) {
    double sum = 0.0;
    Vec y(x.size());
    for (const auto& s : swaps) {
      y = x;
      apply_swap_in_place(y, s);
      sum += base(y);
    }
    return scale * sum;
  };
  return Density2p(g.p, eval, g.factors);
}

OrbitCheckReport orbit_normalization_check(
    const std::function<double(const Vec&)>& q_over_lambda, int p,
    const std::vector<Vec>& points, double tol) {
  if (points.empty())
    throw InvalidInputError("orbit_normalization_check: no points");
  auto swaps = enumerate_swaps(p);
  const double scale = std::ldexp(1.0, -p);
  OrbitCheckReport report;
  report.max_deviation = 0.0;
  for (const auto& x : points) {
    if (x.size() != 2 * p)
      throw InvalidInputError("orbit_normalization_check: bad point dim");
    double sum = 0.0;
    Vec y(x.size());
    for (const auto& s : swaps) {
      y = x;
      apply_swap_in_place(y, s);
      double v = q_over_lambda(y);
      if (std::isnan(v) || v < 0.0)
        throw InvalidDensityError(
            "orbit_normalization_check: negative or NaN density value");
      sum += v;
    }
    double dev = std::abs(scale * sum - 1.0);
    if (dev > report.max_deviation) {
      report.max_deviation = dev;
      report.worst_point = x;
    }
  }
  report.pass = report.max_deviation <= tol;
  return report;
}

std::function<double(const Vec&)> tilt_density(
    std::function<double(const Vec&)> phi, int p) {
  auto swaps = enumerate_swaps(p);
  const double two_p = std::ldexp(1.0, p);
  return [swaps, phi = std::move(phi), two_p, p](const Vec& x) {
    if (x.size() != 2 * p) throw InvalidInputError("tilt_density: bad dim");
    double num = phi(x);
    if (!(num > 0.0))
      throw InvalidInputError("tilt_density: phi must be strictly positive");
    double den = 0.0;
    Vec y(x.size());
    for (const auto& s : swaps) {
      y = x;
      apply_swap_in_place(y, s);
      double v = phi(y);
      if (!(v > 0.0))
        throw InvalidInputError("tilt_density: phi must be strictly positive");
      den += v;
    }
    return two_p * num / den;
  };
}

PointSampler make_tilted_sampler(PointSampler lambda_sampler,
                                 std::function<double(const Vec&)> phi,
                                 int p) {
  auto swaps = enumerate_swaps(p);
  return [lambda_sampler = std::move(lambda_sampler), phi = std::move(phi),
          swaps](Engine& eng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
      Vec x = lambda_sampler(eng);
      double num = phi(x);
      if (!(num > 0.0))
        throw InvalidInputError("tilted sampler: phi must be positive");
      double den = 0.0;
      Vec y(x.size());
      for (const auto& s : swaps) {
        y = x;
        apply_swap_in_place(y, s);
        den += phi(y);
      }
      if (unif(eng) * den <= num) return x;
    }
  };
}

InvariantAgreementReport invariant_event_agreement(
    const PointSampler& sampler_pi, const PointSampler& sampler_lambda,
    const std::vector<std::function<double(const Vec&)>>& test_functions,
    int p, int n, std::uint64_t seed) {
  if (n < 2) throw InvalidInputError("invariant_event_agreement: n too small");
  auto swaps = enumerate_swaps(p);

  // Symmetry spot-check: 64 random points, all swaps.
  {
    Engine eng = make_engine(seed, 0xface);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < 64; ++k) {
      Vec x(2 * p);
      for (int j = 0; j < 2 * p; ++j) x[j] = gauss(eng);
      for (std::size_t fi = 0; fi < test_functions.size(); ++fi) {
        double v0 = test_functions[fi](x);
        for (const auto& s : swaps) {
          double v = test_functions[fi](apply_swap(x, s));
          if (std::abs(v - v0) > 1e-10 * std::max(1.0, std::abs(v0)))
            throw InvalidInputError(
                "invariant_event_agreement: test function is not "
                "swap-symmetric");
        }
      }
    }
  }

  const std::size_t m = test_functions.size();
  std::vector<double> sum_pi(m, 0.0), sumsq_pi(m, 0.0);
  std::vector<double> sum_la(m, 0.0), sumsq_la(m, 0.0);
  Engine eng_pi = make_engine(seed, 1);
  Engine eng_la = make_engine(seed, 2);
  for (int i = 0; i < n; ++i) {
    Vec xp = sampler_pi(eng_pi);
    Vec xl = sampler_lambda(eng_la);
    if (xp.size() != 2 * p || xl.size() != 2 * p)
      throw InvalidInputError("invariant_event_agreement: sampler dim != 2p");
    for (std::size_t fi = 0; fi < m; ++fi) {
      double vp = test_functions[fi](xp);
      double vl = test_functions[fi](xl);
      sum_pi[fi] += vp;
      sumsq_pi[fi] += vp * vp;
      sum_la[fi] += vl;
      sumsq_la[fi] += vl * vl;
    }
  }

  InvariantAgreementReport report;
  report.pass = true;
  for (std::size_t fi = 0; fi < m; ++fi) {
    InvariantAgreementRow row;
    row.mean_pi = sum_pi[fi] / n;
    row.mean_lambda = sum_la[fi] / n;
    double var_pi = (sumsq_pi[fi] - n * row.mean_pi * row.mean_pi) / (n - 1);
    double var_la =
        (sumsq_la[fi] - n * row.mean_lambda * row.mean_lambda) / (n - 1);
    row.diff = row.mean_pi - row.mean_lambda;
    row.se = std::sqrt(std::max(var_pi, 0.0) / n + std::max(var_la, 0.0) / n);
    row.pass = std::abs(row.diff) <= 4.0 * row.se;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace knockoff
