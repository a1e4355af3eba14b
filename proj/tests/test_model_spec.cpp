#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "knockoff/model_spec.hpp"
#include "knockoff/special.hpp"
#include "knockoff/swap_group.hpp"

#include <cmath>

using namespace knockoff;
using json = nlohmann::json;

TEST_CASE("gaussian model parsing and defaults") {
  json j = {{"type", "gaussian"},
            {"sigma", {{1.0, 0.5}, {0.5, 1.0}}}};
  auto model = parse_model(j);
  CHECK(model.kind == ModelSpec::Kind::Gaussian);
  CHECK(model.p == 2);
  // default diagonal is the equicorrelated rule
  CHECK(model.gauss->d[0] == doctest::Approx(1.0));
  CHECK(model.resolved.contains("d"));

  Mat joint = sample_joint_model(model, 500, 3);
  CHECK(joint.rows() == 500);
  CHECK(joint.cols() == 4);
  CHECK((joint - sample_joint_model(model, 500, 3)).cwiseAbs().maxCoeff() ==
        0.0);

  json bad = {{"type", "gaussian"}, {"sigma", {{1.0, 0.5}}}};
  CHECK_THROWS_AS(parse_model(bad), InvalidInputError);
  json unknown = {{"type", "sparkly"}};
  CHECK_THROWS_AS(parse_model(unknown), InvalidInputError);
}

TEST_CASE("archimedean model parsing") {
  json j = {{"type", "archimedean"},
            {"p", 3},
            {"generator", "clayton"},
            {"theta", 2.0},
            {"marginals", {{"type", "uniform"}}}};
  auto model = parse_model(j);
  CHECK(model.kind == ModelSpec::Kind::Archimedean);
  CHECK(model.copula->common_generator());
  Mat joint = sample_joint_model(model, 200, 5);
  CHECK(joint.cols() == 6);
  for (int i = 0; i < joint.rows(); ++i)
    for (int k = 0; k < 6; ++k) CHECK((joint(i, k) > 0.0 && joint(i, k) < 1.0));

  json bad = j;
  bad["generator"] = "frank";
  CHECK_THROWS_AS(parse_model(bad), InvalidInputError);
}

TEST_CASE("mixture model parsing") {
  json j = {{"type", "conjugate-mixture"},
            {"family", "poisson-gamma"},
            {"a", {1.0, 2.0}},
            {"b", {1.0, 1.0}}};
  auto model = parse_model(j);
  CHECK(model.p == 2);
  auto refs = model_marginal_refs(model);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].is_discrete);
  // pmf sums to ~1 over the declared support
  double total = 0.0;
  for (int k = refs[0].lo; k <= refs[0].hi; ++k) total += refs[0].pmf(k);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  json ns = {{"type", "conjugate-mixture"},
             {"family", "normal-scale"},
             {"a", {2.0}},
             {"b", {1.0}}};
  auto ns_model = parse_model(ns);
  auto ns_refs = model_marginal_refs(ns_model);
  CHECK_FALSE(ns_refs[0].is_discrete);
  CHECK(ns_refs[0].cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("discretized model requires a continuous base") {
  json j = {{"type", "discretized"},
            {"grid_n", 8},
            {"base",
             {{"type", "gaussian"}, {"sigma", {{1.0, 0.0}, {0.0, 1.0}}}}}};
  auto model = parse_model(j);
  Mat joint = sample_joint_model(model, 1000, 7);
  for (int i = 0; i < joint.rows(); ++i) {
    CHECK(std::abs(joint(i, 0) - joint(i, 2)) < 1.0 / 8.0);
    CHECK(std::abs(joint(i, 1) - joint(i, 3)) < 1.0 / 8.0);
  }
  auto refs = model_marginal_refs(model);
  CHECK(refs[0].cdf(10.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(refs[0].cdf(-10.0) == doctest::Approx(0.0).epsilon(1e-9));
  // CDF of the discretized marginal interpolates the base CDF at cell edges
  CHECK(refs[0].cdf(0.25) ==
        doctest::Approx(normal_cdf(0.25)).epsilon(1e-3));

  json bad = {{"type", "discretized"},
              {"grid_n", 8},
              {"base",
               {{"type", "conjugate-mixture"},
                {"family", "poisson-gamma"},
                {"a", {1.0}},
                {"b", {1.0}}}}};
  CHECK_THROWS_AS(parse_model(bad), InvalidInputError);
}

TEST_CASE("symmetrized-density model: density and sampler agree") {
  json j = {{"type", "symmetrized-density"}, {"powers", {1.0, 2.0}}};
  auto model = parse_model(j);
  CHECK(model.p == 1);

  // the exposed density is the worked two-term orbit average (x1 + x2)
  auto q = symmetrized_model_density(model);
  Vec pt(2);
  pt << 0.3, 0.7;
  CHECK(q.eval(pt) == doctest::Approx(1.0).epsilon(1e-12));

  // marginal reference matches the sampled first block
  Mat joint = sample_joint_model(model, 40000, 11);
  auto refs = model_marginal_refs(model);
  Vec col = joint.col(0);
  std::sort(col.begin(), col.end());
  double d = 0.0;
  for (int i = 0; i < col.size(); ++i) {
    double f = refs[0].cdf(col[i]);
    d = std::max(d, std::abs((i + 1.0) / col.size() - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / col.size()));
  }
  double crit = std::sqrt(-0.5 * std::log(0.005)) / std::sqrt(40000.0);
  CHECK(d <= crit);
}

TEST_CASE("covariate samplers have the right shapes and reproducibility") {
  json gaussian = {{"type", "gaussian"},
                   {"sigma", {{1.0, 0.3}, {0.3, 1.0}}}};
  json mixture = {{"type", "conjugate-mixture"},
                  {"family", "poisson-gamma"},
                  {"a", {1.0, 2.0}},
                  {"b", {1.0, 1.0}}};
  json clayton = {{"type", "archimedean"},
                  {"p", 2},
                  {"generator", "clayton"},
                  {"theta", 2.0}};
  for (const json& j : {gaussian, mixture, clayton}) {
    auto model = parse_model(j);
    auto sampler = model_covariate_sampler(model);
    Engine e1 = make_engine(99), e2 = make_engine(99);
    auto [x1, xt1] = sampler(50, e1);
    auto [x2, xt2] = sampler(50, e2);
    CHECK(x1.rows() == 50);
    CHECK(x1.cols() == model.p);
    CHECK(xt1.cols() == model.p);
    CHECK((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((xt1 - xt2).cwiseAbs().maxCoeff() == 0.0);
  }

  // gumbel has no posterior machinery: rejected for the filter path
  json gumbel = {{"type", "archimedean"},
                 {"p", 2},
                 {"generator", "gumbel"},
                 {"theta", 2.0}};
  auto gmodel = parse_model(gumbel);
  CHECK_THROWS_AS(model_covariate_sampler(gmodel), UnsupportedModelError);

  json sym = {{"type", "symmetrized-density"}, {"powers", {1.0, 2.0}}};
  auto smodel = parse_model(sym);
  CHECK_THROWS_AS(model_covariate_sampler(smodel), UnsupportedModelError);
}

TEST_CASE("symmetrized sampler matches its own density on cell masses") {
  // p = 1, powers (1, 2): q(x1, x2) = x1 + x2 on the unit square;
  // compare empirical cell masses with exact integrals of q
  json j = {{"type", "symmetrized-density"}, {"powers", {1.0, 2.0}}};
  auto model = parse_model(j);
  const int n = 200000;
  Mat joint = sample_joint_model(model, n, 13);
  const int bins = 4;
  std::vector<double> counts(bins * bins, 0.0);
  for (int i = 0; i < n; ++i) {
    int b0 = std::min(bins - 1, static_cast<int>(bins * joint(i, 0)));
    int b1 = std::min(bins - 1, static_cast<int>(bins * joint(i, 1)));
    counts[b0 * bins + b1] += 1.0;
  }
  auto cell_mass = [](double lo0, double hi0, double lo1, double hi1) {
    // integral of (x1 + x2) over the rectangle
    double w0 = hi0 - lo0, w1 = hi1 - lo1;
    return 0.5 * (hi0 * hi0 - lo0 * lo0) * w1 + 0.5 * (hi1 * hi1 - lo1 * lo1) * w0;
  };
  for (int b0 = 0; b0 < bins; ++b0)
    for (int b1 = 0; b1 < bins; ++b1) {
      double expected = cell_mass(b0 / 4.0, (b0 + 1) / 4.0, b1 / 4.0,
                                  (b1 + 1) / 4.0);
      double got = counts[b0 * bins + b1] / n;
      double se = std::sqrt(expected * (1.0 - expected) / n);
      CHECK(std::abs(got - expected) <= 4.0 * se + 1e-6);
    }
}
