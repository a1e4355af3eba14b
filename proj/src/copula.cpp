#include "knockoff/copula.hpp"

#include "knockoff/numderiv.hpp"
#include "knockoff/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace knockoff {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFrailtyBlockRows = 8192;
}  // namespace

ArchimedeanGenerator clayton_generator(double theta) {
  if (!(theta > 0.0))
    throw InvalidInputError("clayton_generator: theta must be > 0");
  ArchimedeanGenerator g;
  g.name = "clayton";
  g.theta = theta;
  g.psi = [theta](double t) {
    if (t == kInf) return 0.0;
    return std::pow(1.0 + t, -1.0 / theta);
  };
  g.psi_inv = [theta](double u) {
    if (u <= 0.0) return kInf;
    if (u >= 1.0) return 0.0;
    return std::pow(u, -theta) - 1.0;
  };
  g.derivative_sign = [](int k) { return (k % 2 == 0) ? 1 : -1; };
  g.psi_deriv = [theta](int k, double t) {
    // psi^{(k)}(t) = (-1)^k (1+t)^{-1/theta-k} prod_{j=0}^{k-1} (1/theta + j)
    double lead = 1.0;
    for (int j = 0; j < k; ++j) lead *= 1.0 / theta + j;
    double v = lead * std::pow(1.0 + t, -1.0 / theta - k);
    return (k % 2 == 0) ? v : -v;
  };
  g.frailty_sampler = [theta](Engine& eng) {
    std::gamma_distribution<double> gamma(1.0 / theta, 1.0);
    return gamma(eng);
  };
  g.frailty_log_density = [theta](double v) {
    double a = 1.0 / theta;
    if (!(v > 0.0)) return -kInf;
    return (a - 1.0) * std::log(v) - v - std::lgamma(a);
  };
  g.frailty_posterior_sampler = [theta](int p_count, double rate_sum,
                                        Engine& eng) {
    std::gamma_distribution<double> gamma(1.0 / theta + p_count,
                                          1.0 / (1.0 + rate_sum));
    return gamma(eng);
  };
  return g;
}

ArchimedeanGenerator gumbel_generator(double theta) {
  if (!(theta >= 1.0))
    throw InvalidInputError("gumbel_generator: theta must be >= 1");
  ArchimedeanGenerator g;
  g.name = "gumbel";
  g.theta = theta;
  double alpha = 1.0 / theta;
  g.psi = [alpha](double t) {
    if (t == kInf) return 0.0;
    return std::exp(-std::pow(t, alpha));
  };
  g.psi_inv = [theta](double u) {
    if (u <= 0.0) return kInf;
    if (u >= 1.0) return 0.0;
    return std::pow(-std::log(u), theta);
  };
  // positive alpha-stable frailty via Chambers-Mallows-Stuck; Laplace
  // transform exp(-t^alpha)
  if (theta > 1.0) {
    g.frailty_sampler = [alpha](Engine& eng) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::exponential_distribution<double> expo(1.0);
      double th = 3.14159265358979323846 * unif(eng);
      double w = expo(eng);
      double a = std::sin(alpha * th) / std::pow(std::sin(th), 1.0 / alpha);
      double b = std::pow(std::sin((1.0 - alpha) * th) / w,
                          (1.0 - alpha) / alpha);
      return a * b;
    };
  } else {
    // theta == 1: independence generator exp(-t); degenerate frailty V = 1
    g.frailty_sampler = [](Engine&) { return 1.0; };
  }
  return g;
}

GeneratorValidationReport validate_generator(const ArchimedeanGenerator& gen,
                                             std::uint64_t seed) {
  if (!gen.psi || !gen.psi_inv)
    throw InvalidInputError("validate_generator: psi and psi_inv required");
  GeneratorValidationReport report;

  if (std::abs(gen.psi(0.0) - 1.0) > 1e-12)
    throw InvalidInputError("validate_generator: psi(0) must equal 1");

  double prev = 2.0;
  for (double t : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0,
                   200.0, 1e3}) {
    double v = gen.psi(t);
    if (!(v > 0.0 && v <= 1.0))
      throw InvalidInputError("validate_generator: psi must map into (0,1]");
    if (!(v < prev))
      throw InvalidInputError("validate_generator: psi must be strictly decreasing");
    prev = v;
  }

  for (double u = 0.02; u < 1.0; u += 0.02) {
    double err = std::abs(gen.psi(gen.psi_inv(u)) - u);
    report.max_inverse_error = std::max(report.max_inverse_error, err);
  }
  if (report.max_inverse_error > 1e-12)
    throw InvalidInputError("validate_generator: psi(psi_inv(u)) != u");

  if (gen.has_frailty()) {
    Engine eng = make_engine(seed);
    const int n = 200000;
    std::vector<double> ts = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> sum(ts.size(), 0.0), sumsq(ts.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      double v = gen.frailty_sampler(eng);
      if (!(v > 0.0))
        throw InvalidInputError("validate_generator: frailty draw <= 0");
      for (std::size_t j = 0; j < ts.size(); ++j) {
        double e = std::exp(-ts[j] * v);
        sum[j] += e;
        sumsq[j] += e * e;
      }
    }
    for (std::size_t j = 0; j < ts.size(); ++j) {
      double mean = sum[j] / n;
      double var = (sumsq[j] - n * mean * mean) / (n - 1);
      double se = std::sqrt(std::max(var, 1e-300) / n);
      double z = std::abs(mean - gen.psi(ts[j])) / se;
      report.max_frailty_z = std::max(report.max_frailty_z, z);
    }
    if (report.max_frailty_z > 4.0) {
      report.pass = false;
      report.detail = "frailty Laplace transform does not match psi";
      return report;
    }
  }
  report.pass = true;
  return report;
}

Marginal uniform_marginal() {
  Marginal m;
  m.name = "uniform";
  m.cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  m.quantile = [](double u) { return u; };
  m.pdf = [](double x) { return (x > 0.0 && x < 1.0) ? 1.0 : 0.0; };
  return m;
}

Marginal normal_marginal(double mu, double sd) {
  if (!(sd > 0.0)) throw InvalidInputError("normal_marginal: sd must be > 0");
  Marginal m;
  m.name = "normal";
  m.cdf = [mu, sd](double x) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return normal_cdf((x - mu) / sd);
  };
  m.quantile = [mu, sd](double u) { return mu + sd * normal_quantile(u); };
  m.pdf = [mu, sd](double x) { return normal_pdf((x - mu) / sd) / sd; };
  return m;
}

Copula2 Copula2::independence() { return Copula2{}; }
Copula2 Copula2::counter_monotone() {
  Copula2 c;
  c.kind = Kind::CounterMonotone;
  return c;
}
Copula2 Copula2::comonotone() {
  Copula2 c;
  c.kind = Kind::Comonotone;
  return c;
}
Copula2 Copula2::gaussian(double rho) {
  if (!(rho > -1.0 && rho < 1.0))
    throw InvalidInputError("Copula2::gaussian: rho must be in (-1,1)");
  Copula2 c;
  c.kind = Kind::Gaussian;
  c.rho = rho;
  return c;
}
Copula2 Copula2::archimedean(ArchimedeanGenerator g) {
  Copula2 c;
  c.kind = Kind::Archimedean;
  c.gen = std::make_shared<ArchimedeanGenerator>(std::move(g));
  return c;
}

bool Copula2::symmetric() const { return true; }

double Copula2::eval(double u, double v) const {
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  switch (kind) {
    case Kind::Independence:
      return u * v;
    case Kind::CounterMonotone:
      return std::max(u + v - 1.0, 0.0);
    case Kind::Comonotone:
      return std::min(u, v);
    case Kind::Gaussian: {
      if (u <= 0.0 || v <= 0.0) return 0.0;
      if (u >= 1.0) return v;
      if (v >= 1.0) return u;
      return bvn_cdf(normal_quantile(u), normal_quantile(v), rho);
    }
    case Kind::Archimedean: {
      if (u <= 0.0 || v <= 0.0) return 0.0;
      return gen->psi(gen->psi_inv(u) + gen->psi_inv(v));
    }
  }
  return 0.0;
}

CopulaP CopulaP::independence(int p) {
  CopulaP c;
  c.kind = Kind::Independence;
  c.p = p;
  return c;
}
CopulaP CopulaP::gaussian(const Mat& corr) {
  CopulaP c;
  c.kind = Kind::Gaussian;
  c.p = static_cast<int>(corr.rows());
  c.corr = corr;
  if (c.p != 2)
    throw UnsupportedModelError(
        "CopulaP::gaussian: only the bivariate outer copula is supported");
  double rho = corr(0, 1);
  if (!(rho > -1.0 && rho < 1.0))
    throw InvalidInputError("CopulaP::gaussian: off-diagonal must be in (-1,1)");
  return c;
}
CopulaP CopulaP::archimedean(int p, ArchimedeanGenerator g) {
  CopulaP c;
  c.kind = Kind::Archimedean;
  c.p = p;
  c.gen = std::make_shared<ArchimedeanGenerator>(std::move(g));
  return c;
}
CopulaP CopulaP::explicit_fn(int p, std::function<double(const Vec&)> fn,
                             std::function<double(const Vec&)> density) {
  CopulaP c;
  c.kind = Kind::Explicit;
  c.p = p;
  c.fn = std::move(fn);
  c.density_fn = std::move(density);
  return c;
}

double CopulaP::eval(const Vec& u) const {
  if (u.size() != p) throw InvalidInputError("CopulaP::eval: dimension mismatch");
  switch (kind) {
    case Kind::Independence: {
      double prod = 1.0;
      for (int i = 0; i < p; ++i) prod *= std::clamp(u[i], 0.0, 1.0);
      return prod;
    }
    case Kind::Gaussian: {
      double a = std::clamp(u[0], 0.0, 1.0);
      double b = std::clamp(u[1], 0.0, 1.0);
      if (a <= 0.0 || b <= 0.0) return 0.0;
      if (a >= 1.0) return b;
      if (b >= 1.0) return a;
      return bvn_cdf(normal_quantile(a), normal_quantile(b), corr(0, 1));
    }
    case Kind::Archimedean: {
      double t = 0.0;
      for (int i = 0; i < p; ++i) {
        double ui = std::clamp(u[i], 0.0, 1.0);
        if (ui <= 0.0) return 0.0;
        t += gen->psi_inv(ui);
      }
      return gen->psi(t);
    }
    case Kind::Explicit:
      return fn(u);
  }
  return 0.0;
}

double CopulaP::density(const Vec& u) const {
  switch (kind) {
    case Kind::Independence:
      return 1.0;
    case Kind::Gaussian: {
      double z1 = normal_quantile(std::clamp(u[0], 1e-15, 1.0 - 1e-15));
      double z2 = normal_quantile(std::clamp(u[1], 1e-15, 1.0 - 1e-15));
      double rho = corr(0, 1);
      double det = 1.0 - rho * rho;
      double quad = (z1 * z1 + z2 * z2 - 2.0 * rho * z1 * z2) / det;
      return std::exp(-0.5 * (quad - z1 * z1 - z2 * z2)) / std::sqrt(det);
    }
    case Kind::Archimedean: {
      if (!gen->psi_deriv)
        throw UnsupportedModelError(
            "CopulaP::density: no closed-form generator derivatives");
      double t = 0.0;
      double jac = 1.0;
      for (int i = 0; i < p; ++i) {
        double ti = gen->psi_inv(u[i]);
        t += ti;
        jac *= gen->psi_deriv(1, ti);  // (psi_inv)'(u) = 1 / psi'(psi_inv(u))
      }
      return gen->psi_deriv(p, t) / jac;
    }
    case Kind::Explicit:
      if (!density_fn)
        throw UnsupportedModelError("CopulaP::density: no density supplied");
      return density_fn(u);
  }
  return 0.0;
}

void CopulaModelSpec::validate() const {
  if (p < 1) throw InvalidInputError("CopulaModelSpec: p must be >= 1");
  if (c.p != p) throw InvalidInputError("CopulaModelSpec: outer copula dimension != p");
  if (d.size() != static_cast<std::size_t>(p))
    throw InvalidInputError("CopulaModelSpec: need exactly p link copulas");
  if (marginals.size() != static_cast<std::size_t>(p))
    throw InvalidInputError("CopulaModelSpec: need exactly p marginals");
  for (const auto& m : marginals)
    if (!m.cdf || !m.quantile)
      throw InvalidInputError("CopulaModelSpec: marginal needs cdf and quantile");
}

bool CopulaModelSpec::common_generator() const {
  if (c.kind != CopulaP::Kind::Archimedean || !c.gen) return false;
  for (const auto& di : d) {
    if (di.kind != Copula2::Kind::Archimedean || !di.gen) return false;
    if (di.gen == c.gen) continue;
    if (di.gen->name != c.gen->name || di.gen->theta != c.gen->theta)
      return false;
  }
  return true;
}

CopulaModelSpec archimedean_spec(int p, ArchimedeanGenerator gen,
                                 std::vector<Marginal> marginals) {
  CopulaModelSpec spec;
  spec.p = p;
  auto shared = std::make_shared<ArchimedeanGenerator>(std::move(gen));
  spec.c.kind = CopulaP::Kind::Archimedean;
  spec.c.p = p;
  spec.c.gen = shared;
  for (int i = 0; i < p; ++i) {
    Copula2 di;
    di.kind = Copula2::Kind::Archimedean;
    di.gen = shared;
    spec.d.push_back(di);
  }
  spec.marginals = std::move(marginals);
  spec.validate();
  return spec;
}

double evaluate_h(const CopulaModelSpec& spec, const Vec& x) {
  spec.validate();
  if (x.size() != 2 * spec.p)
    throw InvalidInputError("evaluate_h: point dimension != 2p");
  Vec w(spec.p);
  for (int i = 0; i < spec.p; ++i) {
    double u = spec.marginals[i].cdf(x[i]);
    double v = spec.marginals[i].cdf(x[spec.p + i]);
    if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0))
      throw NumericError("evaluate_h: marginal CDF left [0,1]");
    w[i] = spec.d[i].eval(u, v);
  }
  return spec.c.eval(w);
}

namespace {

// C*(u) = C[D_1(u_1,u_{p+1}), ..., D_p(u_p,u_{2p})] on [0,1]^{2p}
double copula_star(const CopulaModelSpec& spec, const Vec& u) {
  Vec w(spec.p);
  for (int i = 0; i < spec.p; ++i)
    w[i] = spec.d[i].eval(u[i], u[spec.p + i]);
  return spec.c.eval(w);
}

}  // namespace

RectangleVolumeReport rectangle_volume_check(const CopulaModelSpec& spec,
                                             int grid_resolution, double tol,
                                             long long guard) {
  spec.validate();
  if (grid_resolution < 1)
    throw InvalidInputError("rectangle_volume_check: resolution must be >= 1");
  const int dims = 2 * spec.p;
  long long cells = 1, nodes = 1;
  for (int i = 0; i < dims; ++i) {
    cells *= grid_resolution;
    nodes *= grid_resolution + 1;
    if (cells > guard || nodes > 2 * guard)
      throw ResourceLimitError("rectangle_volume_check: grid exceeds guard");
  }

  const int r = grid_resolution;
  const int side = r + 1;
  std::vector<double> values(static_cast<std::size_t>(nodes));
  std::vector<long long> stride(dims);
  stride[dims - 1] = 1;
  for (int i = dims - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;

  std::vector<int> idx(dims, 0);
  Vec u(dims);
  for (long long flat = 0; flat < nodes; ++flat) {
    long long rem = flat;
    for (int i = 0; i < dims; ++i) {
      idx[i] = static_cast<int>(rem / stride[i]);
      rem %= stride[i];
    }
    for (int i = 0; i < dims; ++i) u[i] = static_cast<double>(idx[i]) / r;
    values[static_cast<std::size_t>(flat)] = copula_star(spec, u);
  }

  RectangleVolumeReport report;
  report.resolution = r;
  report.tol = tol;
  report.min_volume = std::numeric_limits<double>::infinity();

  std::vector<long long> cell_stride(dims);
  cell_stride[dims - 1] = 1;
  for (int i = dims - 2; i >= 0; --i) cell_stride[i] = cell_stride[i + 1] * r;

  const int corners = 1 << dims;
  std::vector<int> cell(dims, 0);
  for (long long flat = 0; flat < cells; ++flat) {
    long long rem = flat;
    long long base = 0;
    for (int i = 0; i < dims; ++i) {
      cell[i] = static_cast<int>(rem / cell_stride[i]);
      rem %= cell_stride[i];
      base += cell[i] * stride[i];
    }
    double vol = 0.0;
    for (int mask = 0; mask < corners; ++mask) {
      long long node = base;
      int ones = 0;
      for (int i = 0; i < dims; ++i)
        if ((mask >> i) & 1) {
          node += stride[i];
          ++ones;
        }
      double v = values[static_cast<std::size_t>(node)];
      vol += ((dims - ones) % 2 == 0) ? v : -v;
    }
    if (vol < report.min_volume) {
      report.min_volume = vol;
      report.witness_cell = cell;
    }
  }

  report.witness_lo.resize(dims);
  report.witness_hi.resize(dims);
  for (int i = 0; i < dims; ++i) {
    report.witness_lo[i] = static_cast<double>(report.witness_cell[i]) / r;
    report.witness_hi[i] = static_cast<double>(report.witness_cell[i] + 1) / r;
  }
  report.nonnegative = report.min_volume >= -tol;
  return report;
}

std::vector<double> default_t_grid() { return {0.3, 0.6, 1.2, 2.4, 4.8}; }

namespace {

void light_generator_check(const ArchimedeanGenerator& gen) {
  if (!gen.psi || !gen.psi_inv)
    throw InvalidInputError("generator check: psi and psi_inv required");
  if (std::abs(gen.psi(0.0) - 1.0) > 1e-12)
    throw InvalidInputError("generator check: psi(0) must equal 1");
  double prev = 2.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
    double v = gen.psi(t);
    if (!(v > 0.0 && v <= 1.0))
      throw InvalidInputError("generator check: psi must map into (0,1]");
    if (!(v < prev))
      throw InvalidInputError("generator check: psi must be strictly decreasing");
    prev = v;
  }
}

// requirement: sign of the k-th derivative must be zero or `wanted(k)`
GeneratorConditionReport run_sign_checks(
    const std::function<double(double)>& f, int order,
    const std::vector<double>& t_grid, const std::function<int(int)>& wanted,
    const std::function<int(int)>& closed_sign, const char* label) {
  GeneratorConditionReport report;
  report.pass = true;
  for (int k = 1; k <= order; ++k) {
    if (closed_sign) {
      DerivCheckEntry e;
      e.order = k;
      e.t = 0.0;
      e.sign = closed_sign(k);
      e.conclusive = true;
      e.ok = (e.sign == 0 || e.sign == wanted(k));
      report.pass = report.pass && e.ok;
      report.entries.push_back(e);
      continue;
    }
    for (double t : t_grid) {
      auto est = derivative_sign_estimate(f, t, k);
      DerivCheckEntry e;
      e.order = k;
      e.t = t;
      e.sign = est.sign;
      e.conclusive = est.conclusive;
      e.estimate = est.estimate;
      e.ok = est.conclusive && (est.sign == 0 || est.sign == wanted(k));
      if (!est.conclusive) report.inconclusive = true;
      report.pass = report.pass && e.ok;
      report.entries.push_back(e);
    }
  }
  if (!report.pass) {
    std::ostringstream msg;
    msg << label << ": "
        << (report.inconclusive ? "inconclusive derivative signs"
                                : "sign condition violated");
    report.detail = msg.str();
  }
  return report;
}

}  // namespace

GeneratorConditionReport check_generator_conditions(
    const ArchimedeanGenerator& gen, int order,
    const std::vector<double>& t_grid) {
  light_generator_check(gen);
  if (order < 1)
    throw InvalidInputError("check_generator_conditions: order must be >= 1");
  auto wanted = [](int k) { return (k % 2 == 0) ? 1 : -1; };
  return run_sign_checks(gen.psi, order, t_grid, wanted, gen.derivative_sign,
                         "complete monotonicity");
}

GeneratorConditionReport check_nested_condition(
    const ArchimedeanGenerator& psi_outer, const ArchimedeanGenerator& psi_i,
    int order, const std::vector<double>& t_grid) {
  light_generator_check(psi_outer);
  light_generator_check(psi_i);
  auto inner = check_generator_conditions(psi_i, order, t_grid);

  auto composed = [&psi_outer, &psi_i](double t) {
    return psi_outer.psi_inv(psi_i.psi(t));
  };
  auto wanted = [](int k) { return (k % 2 == 0) ? -1 : 1; };
  auto outer = run_sign_checks(composed, order, t_grid, wanted, nullptr,
                               "nested generator condition");

  GeneratorConditionReport report;
  report.pass = inner.pass && outer.pass;
  report.inconclusive = inner.inconclusive || outer.inconclusive;
  report.entries = inner.entries;
  report.entries.insert(report.entries.end(), outer.entries.begin(),
                        outer.entries.end());
  if (psi_outer.name == "clayton" && psi_i.name == "clayton") {
    std::ostringstream msg;
    msg << "clayton-in-clayton parameter restriction (inner theta >= outer "
           "theta): "
        << (psi_i.theta >= psi_outer.theta ? "satisfied" : "violated");
    report.detail = msg.str();
  } else if (!report.pass) {
    report.detail = inner.pass ? outer.detail : inner.detail;
  }
  return report;
}

namespace {

double grid_posterior_draw(const ArchimedeanGenerator& gen, int p_count,
                           double rate_sum, Engine& eng) {
  // inverse-CDF draw from the unnormalized posterior
  // v^p exp(-v rate_sum) f_V(v) on a 4096-point log-spaced grid
  const int kGrid = 4096;
  static thread_local std::vector<double> logw, cdf, vs;
  logw.assign(kGrid, 0.0);
  cdf.assign(kGrid, 0.0);
  vs.assign(kGrid, 0.0);
  const double lo = std::log(1e-6), hi = std::log(1e4);
  double maxlw = -kInf;
  for (int i = 0; i < kGrid; ++i) {
    double v = std::exp(lo + (hi - lo) * i / (kGrid - 1));
    vs[i] = v;
    // +log v accounts for the log-spacing volume element
    double lw = p_count * std::log(v) - v * rate_sum +
                gen.frailty_log_density(v) + std::log(v);
    logw[i] = lw;
    maxlw = std::max(maxlw, lw);
  }
  double total = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    total += std::exp(logw[i] - maxlw);
    cdf[i] = total;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double target = unif(eng) * total;
  int idx = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), target) -
                             cdf.begin());
  idx = std::min(idx, kGrid - 1);
  return vs[idx];
}

const ArchimedeanGenerator& require_common_generator(
    const CopulaModelSpec& spec) {
  if (!spec.common_generator())
    throw UnsupportedModelError(
        "frailty sampling requires C and all D_i Archimedean with a shared "
        "generator");
  return *spec.c.gen;
}

}  // namespace

Vec sample_knockoff_frailty(const CopulaModelSpec& spec, const Vec& x,
                            Engine& eng) {
  spec.validate();
  const auto& gen = require_common_generator(spec);
  if (x.size() != spec.p)
    throw InvalidInputError("sample_knockoff_frailty: x dimension != p");

  double rate_sum = 0.0;
  for (int i = 0; i < spec.p; ++i) {
    double u = spec.marginals[i].cdf(x[i]);
    if (u <= 0.0 || u >= 1.0)
      throw BoundaryError(
          "sample_knockoff_frailty: marginal CDF hit {0,1}; point outside "
          "the open support");
    rate_sum += gen.psi_inv(u);
  }

  double v;
  if (gen.has_exact_posterior()) {
    v = gen.frailty_posterior_sampler(spec.p, rate_sum, eng);
  } else if (gen.frailty_log_density) {
    v = grid_posterior_draw(gen, spec.p, rate_sum, eng);
  } else {
    throw UnsupportedModelError(
        "sample_knockoff_frailty: generator has no posterior machinery");
  }

  std::exponential_distribution<double> expo(1.0);
  Vec xt(spec.p);
  for (int i = 0; i < spec.p; ++i)
    xt[i] = spec.marginals[i].quantile(gen.psi(expo(eng) / v));
  return xt;
}

Vec sample_knockoff_frailty(const CopulaModelSpec& spec, const Vec& x,
                            std::uint64_t seed) {
  Engine eng = make_engine(seed);
  return sample_knockoff_frailty(spec, x, eng);
}

namespace {

Mat sample_frailty_blocks(const CopulaModelSpec& spec, int n,
                          std::uint64_t seed, bool with_knockoff) {
  spec.validate();
  const auto& gen = require_common_generator(spec);
  if (!gen.has_frailty())
    throw UnsupportedModelError("frailty joint sampling needs a frailty sampler");
  if (n < 1) throw InvalidInputError("sample: n must be >= 1");
  const int p = spec.p;
  const int cols = with_knockoff ? 2 * p : p;
  Mat out(n, cols);
  std::exponential_distribution<double> expo(1.0);
  int row = 0;
  std::uint64_t block = 0;
  while (row < n) {
    int take = std::min(kFrailtyBlockRows, n - row);
    Engine eng = make_engine(seed, block++);
    for (int i = 0; i < take; ++i) {
      double v = gen.frailty_sampler(eng);
      for (int j = 0; j < p; ++j)
        out(row + i, j) = spec.marginals[j].quantile(gen.psi(expo(eng) / v));
      if (with_knockoff)
        for (int j = 0; j < p; ++j)
          out(row + i, p + j) =
              spec.marginals[j].quantile(gen.psi(expo(eng) / v));
    }
    row += take;
  }
  return out;
}

}  // namespace

Mat sample_joint_frailty(const CopulaModelSpec& spec, int n,
                         std::uint64_t seed) {
  return sample_frailty_blocks(spec, n, seed, true);
}

Mat sample_x_frailty(const CopulaModelSpec& spec, int n, std::uint64_t seed) {
  return sample_frailty_blocks(spec, n, seed, false);
}

double conditional_cdf_oracle(const CopulaModelSpec& spec, const Vec& x) {
  spec.validate();
  if (spec.p > 3)
    throw InvalidInputError("conditional_cdf_oracle: p <= 3 required");
  if (x.size() != 2 * spec.p)
    throw InvalidInputError("conditional_cdf_oracle: point dimension != 2p");
  const int p = spec.p;

  Vec u(p);
  double marginal_jac = 1.0;
  for (int i = 0; i < p; ++i) {
    if (!spec.marginals[i].pdf)
      throw UnsupportedModelError("conditional_cdf_oracle: marginal pdf required");
    u[i] = spec.marginals[i].cdf(x[i]);
    marginal_jac *= spec.marginals[i].pdf(x[i]);
  }
  double denom = spec.c.density(u) * marginal_jac;
  if (!(std::abs(denom) > 1e-12))
    throw DegenerateError("conditional_cdf_oracle: denominator below 1e-12");

  // mixed first partials in x_1..x_p by a central-difference tensor
  Vec h(p);
  for (int i = 0; i < p; ++i) {
    double scale =
        0.5 * (spec.marginals[i].quantile(0.84) - spec.marginals[i].quantile(0.16));
    h[i] = 1e-2 * std::max(scale, 1e-8);
  }
  double num = 0.0;
  for (int mask = 0; mask < (1 << p); ++mask) {
    Vec y = x;
    int negs = 0;
    for (int i = 0; i < p; ++i) {
      if ((mask >> i) & 1) {
        y[i] += h[i];
      } else {
        y[i] -= h[i];
        ++negs;
      }
    }
    double v = evaluate_h(spec, y);
    num += (negs % 2 == 0) ? v : -v;
  }
  for (int i = 0; i < p; ++i) num /= 2.0 * h[i];

  return std::clamp(num / denom, 0.0, 1.0);
}

double kendall_tau_generator(const ArchimedeanGenerator& gen) {
  light_generator_check(gen);
  // tau = 1 + 4 Int_0^1 psi_inv(t) / (psi_inv)'(t) dt, derivative by
  // central differences
  static const int kNodes = 256;
  auto nodes = gauss_legendre(kNodes, 0.0, 1.0);
  double integral = 0.0;
  for (const auto& [t, w] : nodes) {
    double hh = 1e-6 * std::min(t, 1.0 - t);
    if (hh <= 0.0) continue;
    double d = (gen.psi_inv(t + hh) - gen.psi_inv(t - hh)) / (2.0 * hh);
    if (d == 0.0) continue;
    integral += w * gen.psi_inv(t) / d;
  }
  return 1.0 + 4.0 * integral;
}

}  // namespace knockoff
