#include "knockoff/mixture.hpp"

#include "knockoff/special.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

namespace knockoff {

namespace {

constexpr int kMixBlockRows = 8192;
constexpr double kTwoPi = 6.28318530717958647692;

bool is_count(double y) { return y >= 0.0 && std::floor(y) == y; }

double normal_density(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) /
         std::sqrt(kTwoPi * var);
}

// Integral of f over [lo, hi]. A zero lower endpoint signals a gamma-type
// integrand with a possible algebraic singularity at 0: tanh-sinh handles
// that to machine precision. Otherwise (smooth, possibly sharply peaked on a
// domain already matched to the peak) composite Gauss-Legendre is used.
double integrate(const std::function<double(double)>& f, double lo,
                 double hi) {
  if (lo == 0.0) {
    const int n = 4000;
    const double tmax = 4.0, h = 2.0 * tmax / n;
    const double half_pi = 1.57079632679489661923;
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
      double t = -tmax + i * h;
      double s = half_pi * std::sinh(t);
      double x = 0.5 * (1.0 + std::tanh(s));
      double ch = std::cosh(s);
      double w = 0.5 * half_pi * std::cosh(t) / (ch * ch);
      total += h * w * f(hi * x) * hi;
    }
    return total;
  }
  static const auto base = gauss_legendre(64, 0.0, 1.0);
  const int panels = 16;
  double total = 0.0;
  double width = (hi - lo) / panels;
  for (int pnl = 0; pnl < panels; ++pnl) {
    double a = lo + pnl * width;
    for (const auto& [x, w] : base) total += w * width * f(a + x * width);
  }
  return total;
}

// Registration gate: closed-form predictives vs quadrature of the likelihood
// against the prior, on family-supplied test observations.
void cross_validate_coord(const CoordFamily& c, int index,
                          const std::vector<double>& test_points) {
  for (double y : test_points) {
    for (double yt : test_points) {
      auto [lo, hi] = c.quad_domain(y, yt);
      double quad_pair = integrate(
          [&](double th) {
            return c.like_pdf(y, th) * c.like_pdf(yt, th) * c.prior_pdf(th);
          },
          lo, hi);
      double closed_pair = c.pair_pred(y, yt);
      if (std::abs(quad_pair - closed_pair) >
          1e-8 * std::max(1.0, std::abs(closed_pair))) {
        std::ostringstream msg;
        msg << "conjugate family registration failed: coordinate " << index
            << " pair predictive at (" << y << "," << yt
            << ") disagrees with quadrature (" << closed_pair << " vs "
            << quad_pair << ")";
        throw ConstructionError(msg.str());
      }
    }
    auto [lo, hi] = c.quad_domain(y, y);
    double quad_marg = integrate(
        [&](double th) { return c.like_pdf(y, th) * c.prior_pdf(th); }, lo,
        hi);
    double closed_marg = c.marg_pred(y);
    if (std::abs(quad_marg - closed_marg) >
        1e-8 * std::max(1.0, std::abs(closed_marg)))
      throw ConstructionError(
          "conjugate family registration failed: marginal predictive "
          "disagrees with quadrature");
  }
}

}  // namespace

ConjugateFamily::ConjugateFamily(Kind kind, std::string name,
                                 std::vector<CoordFamily> coords)
    : kind_(kind), name_(std::move(name)), coords_(std::move(coords)) {
  if (coords_.empty())
    throw InvalidInputError("ConjugateFamily: needs at least one coordinate");
  for (const auto& c : coords_) {
    if (!c.pair_pred || !c.marg_pred || !c.cond_pred || !c.prior_draw ||
        !c.posterior_draw || !c.like_draw || !c.like_pdf || !c.prior_pdf ||
        !c.quad_domain)
      throw InvalidInputError("ConjugateFamily: incomplete coordinate spec");
    if (c.discrete != coords_.front().discrete)
      throw InvalidInputError(
          "ConjugateFamily: mixed dominating measures are not supported");
  }
}

ConjugateFamily poisson_gamma_family(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 1)
    throw InvalidInputError("poisson_gamma_family: bad hyperparameter arrays");
  std::vector<CoordFamily> coords;
  for (int i = 0; i < a.size(); ++i) {
    double ai = a[i], bi = b[i];
    if (!(ai > 0.0) || !(bi > 0.0))
      throw InvalidInputError("poisson_gamma_family: a, b must be positive");
    CoordFamily c;
    c.discrete = true;
    c.theta_free_mean = false;
    c.pair_pred = [ai, bi](double y, double yt) {
      if (!is_count(y) || !is_count(yt)) return 0.0;
      return std::exp(ai * std::log(bi) - std::lgamma(ai) -
                      std::lgamma(y + 1.0) - std::lgamma(yt + 1.0) +
                      std::lgamma(ai + y + yt) -
                      (ai + y + yt) * std::log(bi + 2.0));
    };
    c.marg_pred = [ai, bi](double y) {
      if (!is_count(y)) return 0.0;
      return std::exp(ai * std::log(bi) - std::lgamma(ai) -
                      std::lgamma(y + 1.0) + std::lgamma(ai + y) -
                      (ai + y) * std::log(bi + 1.0));
    };
    c.cond_pred = [ai, bi](double x, double xt) {
      if (!is_count(x) || !is_count(xt)) return 0.0;
      return std::exp(-std::lgamma(xt + 1.0) + std::lgamma(ai + x + xt) -
                      std::lgamma(ai + x) + (ai + x) * std::log(bi + 1.0) -
                      (ai + x + xt) * std::log(bi + 2.0));
    };
    c.prior_draw = [ai, bi](Engine& eng) {
      std::gamma_distribution<double> g(ai, 1.0 / bi);
      return g(eng);
    };
    c.posterior_draw = [ai, bi](double x, Engine& eng) {
      std::gamma_distribution<double> g(ai + x, 1.0 / (bi + 1.0));
      return g(eng);
    };
    c.like_draw = [](double theta, Engine& eng) {
      std::poisson_distribution<long> pois(theta);
      return static_cast<double>(pois(eng));
    };
    c.like_pdf = [](double t, double theta) {
      if (!is_count(t)) return 0.0;
      return std::exp(t * std::log(theta) - theta - std::lgamma(t + 1.0));
    };
    c.like_cdf = [](double t, double theta) {
      if (t < 0.0) return 0.0;
      long k = static_cast<long>(std::floor(t));
      double total = 0.0, term = std::exp(-theta);
      for (long j = 0; j <= k; ++j) {
        total += term;
        term *= theta / (j + 1.0);
      }
      return std::min(total, 1.0);
    };
    c.prior_pdf = [ai, bi](double th) {
      if (!(th > 0.0)) return 0.0;
      return std::exp(ai * std::log(bi) - std::lgamma(ai) +
                      (ai - 1.0) * std::log(th) - bi * th);
    };
    c.quad_domain = [ai, bi](double y, double yt) {
      // gamma-shaped integrand: cover the mode within +-14 sd
      double shape = ai + std::max(y, 0.0) + std::max(yt, 0.0);
      double rate = bi + 2.0;
      double lo = std::max(0.0, (shape - 14.0 * std::sqrt(shape)) / rate);
      double hi = (shape + 14.0 * std::sqrt(shape) + 40.0) / rate;
      return std::make_pair(lo, hi);
    };
    coords.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < coords.size(); ++i)
    cross_validate_coord(coords[i], static_cast<int>(i), {0.0, 1.0, 3.0, 8.0});
  return ConjugateFamily(ConjugateFamily::Kind::PoissonGamma, "poisson-gamma",
                         std::move(coords));
}

ConjugateFamily normal_normal_family(const Vec& prior_mean,
                                     const Vec& prior_var,
                                     const Vec& obs_var) {
  const int p = static_cast<int>(prior_mean.size());
  if (prior_var.size() != p || obs_var.size() != p || p < 1)
    throw InvalidInputError("normal_normal_family: bad hyperparameter arrays");
  std::vector<CoordFamily> coords;
  for (int i = 0; i < p; ++i) {
    double m0 = prior_mean[i], v0 = prior_var[i], s2 = obs_var[i];
    if (!(v0 > 0.0) || !(s2 > 0.0))
      throw InvalidInputError("normal_normal_family: variances must be positive");
    CoordFamily c;
    c.discrete = false;
    c.theta_free_mean = false;
    c.pair_pred = [m0, v0, s2](double y, double yt) {
      // bivariate normal, mean (m0, m0), cov [[s2+v0, v0], [v0, s2+v0]]
      double a = s2 + v0;
      double det = a * a - v0 * v0;
      double dy = y - m0, dyt = yt - m0;
      double quad = (a * dy * dy - 2.0 * v0 * dy * dyt + a * dyt * dyt) / det;
      return std::exp(-0.5 * quad) / (kTwoPi * std::sqrt(det));
    };
    c.marg_pred = [m0, v0, s2](double y) {
      return normal_density(y, m0, s2 + v0);
    };
    c.marg_cdf = [m0, v0, s2](double y) {
      return normal_cdf((y - m0) / std::sqrt(s2 + v0));
    };
    c.cond_pred = [m0, v0, s2](double x, double xt) {
      double vp = v0 * s2 / (v0 + s2);
      double mp = vp * (m0 / v0 + x / s2);
      return normal_density(xt, mp, s2 + vp);
    };
    c.prior_draw = [m0, v0](Engine& eng) {
      std::normal_distribution<double> g(m0, std::sqrt(v0));
      return g(eng);
    };
    c.posterior_draw = [m0, v0, s2](double x, Engine& eng) {
      double vp = v0 * s2 / (v0 + s2);
      double mp = vp * (m0 / v0 + x / s2);
      std::normal_distribution<double> g(mp, std::sqrt(vp));
      return g(eng);
    };
    c.like_draw = [s2](double theta, Engine& eng) {
      std::normal_distribution<double> g(theta, std::sqrt(s2));
      return g(eng);
    };
    c.like_pdf = [s2](double t, double theta) {
      return normal_density(t, theta, s2);
    };
    c.like_cdf = [s2](double t, double theta) {
      return normal_cdf((t - theta) / std::sqrt(s2));
    };
    c.prior_pdf = [m0, v0](double th) { return normal_density(th, m0, v0); };
    c.quad_domain = [m0, v0, s2](double y, double yt) {
      double s = std::sqrt(v0 + s2);
      double lo = std::min({y, yt, m0}) - 14.0 * s;
      double hi = std::max({y, yt, m0}) + 14.0 * s;
      return std::make_pair(lo, hi);
    };
    coords.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < coords.size(); ++i)
    cross_validate_coord(coords[i], static_cast<int>(i),
                         {-2.0, -0.5, 0.0, 1.2, 3.0});
  return ConjugateFamily(ConjugateFamily::Kind::NormalNormal, "normal-normal",
                         std::move(coords));
}

ConjugateFamily normal_scale_family(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 1)
    throw InvalidInputError("normal_scale_family: bad hyperparameter arrays");
  std::vector<CoordFamily> coords;
  for (int i = 0; i < a.size(); ++i) {
    double ai = a[i], bi = b[i];
    if (!(ai > 0.0) || !(bi > 0.0))
      throw InvalidInputError("normal_scale_family: a, b must be positive");
    CoordFamily c;
    c.discrete = false;
    c.theta_free_mean = true;
    c.fixed_mean = 0.0;
    c.pair_pred = [ai, bi](double y, double yt) {
      return std::exp(std::lgamma(ai + 1.0) - std::lgamma(ai) +
                      ai * std::log(bi) - std::log(kTwoPi) -
                      (ai + 1.0) * std::log(bi + 0.5 * (y * y + yt * yt)));
    };
    c.marg_pred = [ai, bi](double y) {
      return std::exp(std::lgamma(ai + 0.5) - std::lgamma(ai) +
                      ai * std::log(bi) - 0.5 * std::log(kTwoPi) -
                      (ai + 0.5) * std::log(bi + 0.5 * y * y));
    };
    // marginal is a scaled Student-t with 2a dof and scale sqrt(b/a)
    c.marg_cdf = [ai, bi](double y) {
      return student_t_cdf(y / std::sqrt(bi / ai), 2.0 * ai);
    };
    c.cond_pred = [ai, bi](double x, double xt) {
      return std::exp(std::lgamma(ai + 1.0) - std::lgamma(ai + 0.5) -
                      0.5 * std::log(kTwoPi) +
                      (ai + 0.5) * std::log(bi + 0.5 * x * x) -
                      (ai + 1.0) * std::log(bi + 0.5 * (x * x + xt * xt)));
    };
    c.prior_draw = [ai, bi](Engine& eng) {
      std::gamma_distribution<double> g(ai, 1.0 / bi);
      return g(eng);
    };
    c.posterior_draw = [ai, bi](double x, Engine& eng) {
      std::gamma_distribution<double> g(ai + 0.5, 1.0 / (bi + 0.5 * x * x));
      return g(eng);
    };
    c.like_draw = [](double theta, Engine& eng) {
      std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(theta));
      return g(eng);
    };
    c.like_pdf = [](double t, double theta) {
      return normal_density(t, 0.0, 1.0 / theta);
    };
    c.like_cdf = [](double t, double theta) {
      return normal_cdf(t * std::sqrt(theta));
    };
    c.prior_pdf = [ai, bi](double th) {
      if (!(th > 0.0)) return 0.0;
      return std::exp(ai * std::log(bi) - std::lgamma(ai) +
                      (ai - 1.0) * std::log(th) - bi * th);
    };
    c.quad_domain = [ai, bi](double y, double yt) {
      double shape = ai + 1.0;
      double rate = bi + 0.5 * (y * y + yt * yt);
      double lo = std::max(0.0, (shape - 14.0 * std::sqrt(shape)) / rate);
      double hi = (shape + 14.0 * std::sqrt(shape) + 40.0) / rate;
      return std::make_pair(lo, hi);
    };
    coords.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < coords.size(); ++i)
    cross_validate_coord(coords[i], static_cast<int>(i),
                         {-2.0, -0.5, 0.0, 1.2, 3.0});
  return ConjugateFamily(ConjugateFamily::Kind::NormalScale, "normal-scale",
                         std::move(coords));
}

ConjugateFamily custom_family(std::string name,
                              std::vector<CoordFamily> coords) {
  std::vector<double> test_points;
  if (!coords.empty() && coords.front().discrete)
    test_points = {0.0, 1.0, 3.0, 8.0};
  else
    test_points = {-2.0, -0.5, 0.0, 1.2, 3.0};
  for (std::size_t i = 0; i < coords.size(); ++i)
    cross_validate_coord(coords[i], static_cast<int>(i), test_points);
  return ConjugateFamily(ConjugateFamily::Kind::Custom, std::move(name),
                         std::move(coords));
}

double knockoff_joint_density(const ConjugateFamily& family, const Vec& y) {
  const int p = family.p();
  if (y.size() != 2 * p)
    throw InvalidInputError("knockoff_joint_density: point dimension != 2p");
  double prod = 1.0;
  for (int i = 0; i < p; ++i)
    prod *= family.coord(i).pair_pred(y[i], y[p + i]);
  return prod;
}

double marginal_density(const ConjugateFamily& family, const Vec& x) {
  const int p = family.p();
  if (x.size() != p)
    throw InvalidInputError("marginal_density: point dimension != p");
  double prod = 1.0;
  for (int i = 0; i < p; ++i) prod *= family.coord(i).marg_pred(x[i]);
  return prod;
}

double conditional_knockoff_density(const ConjugateFamily& family,
                                    const Vec& x, const Vec& xt) {
  const int p = family.p();
  if (x.size() != p || xt.size() != p)
    throw InvalidInputError("conditional_knockoff_density: bad dimensions");
  double prod = 1.0;
  for (int i = 0; i < p; ++i) {
    if (!(family.coord(i).marg_pred(x[i]) > 0.0))
      throw DegenerateError(
          "conditional_knockoff_density: conditioning point has zero "
          "marginal density");
    prod *= family.coord(i).cond_pred(x[i], xt[i]);
  }
  return prod;
}

Vec sample_knockoff(const ConjugateFamily& family, const Vec& x, Engine& eng) {
  const int p = family.p();
  if (x.size() != p)
    throw InvalidInputError("sample_knockoff: point dimension != p");
  Vec xt(p);
  for (int i = 0; i < p; ++i) {
    if (!(family.coord(i).marg_pred(x[i]) > 0.0))
      throw DegenerateError("sample_knockoff: h(x) = 0 at the given point");
    double theta = family.coord(i).posterior_draw(x[i], eng);
    xt[i] = family.coord(i).like_draw(theta, eng);
  }
  return xt;
}

Vec sample_knockoff(const ConjugateFamily& family, const Vec& x,
                    std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return sample_knockoff(family, x, eng);
}

namespace {

Mat sample_mixture_blocks(const ConjugateFamily& family, int n,
                          std::uint64_t seed, bool with_knockoff) {
  if (n < 1) throw InvalidInputError("sample: n must be >= 1");
  const int p = family.p();
  Mat out(n, with_knockoff ? 2 * p : p);
  int row = 0;
  std::uint64_t block = 0;
  while (row < n) {
    int take = std::min(kMixBlockRows, n - row);
    Engine eng = make_engine(seed, block++);
    for (int i = 0; i < take; ++i) {
      for (int j = 0; j < p; ++j) {
        double theta = family.coord(j).prior_draw(eng);
        out(row + i, j) = family.coord(j).like_draw(theta, eng);
        if (with_knockoff)
          out(row + i, p + j) = family.coord(j).like_draw(theta, eng);
      }
    }
    row += take;
  }
  return out;
}

}  // namespace

Mat sample_joint_mixture(const ConjugateFamily& family, int n,
                         std::uint64_t seed) {
  return sample_mixture_blocks(family, n, seed, true);
}

Mat sample_x_mixture(const ConjugateFamily& family, int n,
                     std::uint64_t seed) {
  return sample_mixture_blocks(family, n, seed, false);
}

MixtureDensityBundle density_bundle(const ConjugateFamily& family) {
  const int p = family.p();
  std::vector<MeasureFactor> factors(
      2 * p,
      family.discrete() ? MeasureFactor::Counting : MeasureFactor::Lebesgue);
  auto owned = std::make_shared<ConjugateFamily>(family);
  MixtureDensityBundle bundle;
  bundle.q = Density2p(
      p, [owned](const Vec& y) { return knockoff_joint_density(*owned, y); },
      std::move(factors));
  bundle.h = [owned](const Vec& x) { return marginal_density(*owned, x); };
  return bundle;
}

namespace {

double rect_prob_coord(const CoordFamily& c, double lo, double hi,
                       double theta) {
  if (hi < lo) throw InvalidInputError("dependence_gap: rectangle hi < lo");
  if (c.discrete) {
    double upper = c.like_cdf(std::floor(hi), theta);
    double lower = (lo > 0.0) ? c.like_cdf(std::ceil(lo) - 1.0, theta) : 0.0;
    return upper - lower;
  }
  return c.like_cdf(hi, theta) - c.like_cdf(lo, theta);
}

}  // namespace

EstimateWithSe dependence_gap(const ConjugateFamily& family,
                              const Rectangle& a, const Rectangle& b, int n,
                              std::uint64_t seed) {
  const int p = family.p();
  if (a.lo.size() != p || a.hi.size() != p || b.lo.size() != p ||
      b.hi.size() != p)
    throw InvalidInputError("dependence_gap: rectangle dimension != p");
  if (n < 2) throw InvalidInputError("dependence_gap: n too small");
  for (const auto& c : {&a, &b})
    for (int i = 0; i < p; ++i)
      if (c->hi[i] < c->lo[i])
        throw InvalidInputError("dependence_gap: rectangle hi < lo");

  Engine eng = make_engine(seed);
  double sum_t = 0.0, sum_u = 0.0, sum_v = 0.0;
  double sum_tt = 0.0, sum_uu = 0.0, sum_vv = 0.0;
  double sum_tu = 0.0, sum_tv = 0.0, sum_uv = 0.0;
  for (int m = 0; m < n; ++m) {
    double qa = 1.0, qb = 1.0;
    for (int i = 0; i < p; ++i) {
      double theta = family.coord(i).prior_draw(eng);
      qa *= rect_prob_coord(family.coord(i), a.lo[i], a.hi[i], theta);
      qb *= rect_prob_coord(family.coord(i), b.lo[i], b.hi[i], theta);
    }
    double t = qa * qb;
    sum_t += t;
    sum_u += qa;
    sum_v += qb;
    sum_tt += t * t;
    sum_uu += qa * qa;
    sum_vv += qb * qb;
    sum_tu += t * qa;
    sum_tv += t * qb;
    sum_uv += qa * qb;
  }
  double mt = sum_t / n, mu = sum_u / n, mv = sum_v / n;
  EstimateWithSe out;
  out.estimate = mt - mu * mv;
  // delta method for g(T,U,V) = T - U V
  double var_t = sum_tt / n - mt * mt;
  double var_u = sum_uu / n - mu * mu;
  double var_v = sum_vv / n - mv * mv;
  double cov_tu = sum_tu / n - mt * mu;
  double cov_tv = sum_tv / n - mt * mv;
  double cov_uv = sum_uv / n - mu * mv;
  double var = var_t + mv * mv * var_u + mu * mu * var_v -
               2.0 * mv * cov_tu - 2.0 * mu * cov_tv + 2.0 * mu * mv * cov_uv;
  out.se = std::sqrt(std::max(var, 0.0) / n);
  return out;
}

std::vector<UncorrelatedRow> uncorrelated_check(const ConjugateFamily& family,
                                                int n, std::uint64_t seed) {
  if (n < 2) throw InvalidInputError("uncorrelated_check: n too small");
  const int p = family.p();
  Mat joint = sample_joint_mixture(family, n, seed);
  std::vector<UncorrelatedRow> rows;
  for (int i = 0; i < p; ++i) {
    double mx = joint.col(i).mean();
    double mxt = joint.col(p + i).mean();
    Vec u = ((joint.col(i).array() - mx) * (joint.col(p + i).array() - mxt))
                .matrix();
    UncorrelatedRow row;
    row.coord = i + 1;
    row.cov = u.mean();
    double var = (u.array() - row.cov).square().sum() / (n - 1);
    row.se = std::sqrt(var / n);
    row.theta_free_mean = family.coord(i).theta_free_mean;
    row.zero_within_4se = std::abs(row.cov) <= 4.0 * row.se;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace knockoff
