// Command-line driver: joint sampling, diagnostics, copula checks, filter
// simulation, and the discretization TV table, all seeded and file-based.

#include "knockoff/diagnostics.hpp"
#include "knockoff/discretization.hpp"
#include "knockoff/filter_sim.hpp"
#include "knockoff/io.hpp"
#include "knockoff/model_spec.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <string>

namespace {

using knockoff::Engine;
using knockoff::Mat;
using knockoff::Vec;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 12345;

struct RunConfig {
  std::string command;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string format = "csv";
  bool quiet = false;
  json body;
};

[[noreturn]] void config_error(const std::string& what) {
  throw knockoff::InvalidInputError(what);
}

RunConfig load_config(const std::string& path, const std::string& seed_flag,
                      const std::string& out_flag) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("config parse error at byte " + std::to_string(e.byte) +
                 ": " + e.what());
  }
  RunConfig cfg;
  cfg.body = j;
  if (!j.contains("command") || !j["command"].is_string())
    config_error("config field 'command': missing or not a string");
  cfg.command = j["command"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (!seed_flag.empty()) cfg.seed = std::stoull(seed_flag);
  if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  if (!out_flag.empty()) cfg.out = out_flag;
  if (j.contains("format")) cfg.format = j["format"].get<std::string>();
  if (cfg.format != "csv" && cfg.format != "json")
    config_error("config field 'format': must be 'csv' or 'json'");
  if (cfg.out.empty())
    cfg.out = (cfg.command == "sample") ? "samples.csv" : "report.json";
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write output file '" + path + "'");
  out << text;
}

ordered_json report_head(const RunConfig& cfg) {
  ordered_json r;
  r["command"] = cfg.command;
  r["seed"] = cfg.seed;
  r["config"] = ordered_json(cfg.body);
  r["config"].erase("seed");
  return r;
}

// ---- sample ----------------------------------------------------------

int run_sample(const RunConfig& cfg) {
  if (!cfg.body.contains("model")) config_error("config field 'model': missing");
  auto model = knockoff::parse_model(cfg.body["model"]);
  long n = cfg.body.value("n", 0L);
  if (n < 1) config_error("config field 'n': must be >= 1");
  Mat rows = knockoff::sample_joint_model(model, static_cast<int>(n), cfg.seed);

  std::vector<std::string> header;
  for (int j = 1; j <= model.p; ++j) header.push_back("X" + std::to_string(j));
  for (int j = 1; j <= model.p; ++j)
    header.push_back("XK" + std::to_string(j));

  if (cfg.format == "csv") {
    std::ostringstream os;
    knockoff::write_csv(os, header, rows);
    write_text(cfg.out, os.str());
  } else {
    ordered_json r = report_head(cfg);
    r["columns"] = header;
    ordered_json data = ordered_json::array();
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < rows.cols(); ++j) row.push_back(rows(i, j));
      data.push_back(std::move(row));
    }
    r["rows"] = std::move(data);
    write_text(cfg.out, r.dump(2) + "\n");
  }
  return 0;
}

// ---- diagnose --------------------------------------------------------

int run_diagnose(const RunConfig& cfg) {
  if (!cfg.body.contains("model")) config_error("config field 'model': missing");
  auto model = knockoff::parse_model(cfg.body["model"]);
  long n = cfg.body.value("n", 20000L);
  if (n < 1000) config_error("config field 'n': diagnose needs n >= 1000");
  json opts = cfg.body.value("diagnostics", json::object());
  int n_perm = opts.value("n_permutations", 200);
  int max_rows = opts.value("energy_max_rows", 5000);
  double alpha = opts.value("alpha", 0.05);

  Mat samples = knockoff::sample_joint_model(model, static_cast<int>(n), cfg.seed);
  knockoff::DiagnosticsReport report;

  // energy swap tests: every singleton plus the full swap
  std::vector<knockoff::SwapSet> swap_sets;
  for (int j = 1; j <= model.p; ++j)
    swap_sets.push_back(knockoff::SwapSet::from_indices(model.p, {j}));
  swap_sets.push_back(
      knockoff::SwapSet(model.p, (std::uint64_t{1} << model.p) - 1));
  for (std::size_t k = 0; k < swap_sets.size(); ++k) {
    knockoff::TestRecord rec;
    std::uint64_t test_seed = knockoff::derive_seed(cfg.seed, 1000 + k);
    double pval = knockoff::swap_test_energy(samples, swap_sets[k], n_perm,
                                             test_seed, max_rows);
    rec.test = "energy-swap-S{";
    const auto members = swap_sets[k].members();
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m) rec.test += ",";
      rec.test += std::to_string(members[m]);
    }
    rec.test += "}";
    rec.statistic = pval;
    rec.threshold = alpha;
    rec.p_value = pval;
    rec.pass = pval > alpha;
    rec.seed = test_seed;
    rec.n = n;
    report.records.push_back(rec);
  }

  // marginal preservation against the model's own references
  auto refs = knockoff::model_marginal_refs(model);
  auto marginal_rows = knockoff::marginal_preservation_test(samples, refs, 0.01);
  for (const auto& row : marginal_rows) {
    knockoff::TestRecord rec;
    rec.test = std::string("marginal-") + (row.knockoff_block ? "XK" : "X") +
               std::to_string(row.coord);
    rec.statistic = row.statistic;
    rec.threshold = row.critical;
    rec.pass = row.pass;
    rec.seed = cfg.seed;
    rec.n = n;
    report.records.push_back(rec);
  }

  // covariance consistency (off-diagonal gates)
  auto cov = knockoff::covariance_consistency(samples);
  {
    knockoff::TestRecord rec;
    rec.test = "covariance-consistency";
    double worst = 0.0;
    for (const auto& row : cov.rows)
      if (row.gated && row.se > 0.0)
        worst = std::max(worst, std::abs(row.diff) / row.se);
    rec.statistic = worst;
    rec.threshold = 4.0;
    rec.pass = cov.pass;
    rec.seed = cfg.seed;
    rec.n = n;
    report.records.push_back(rec);
  }
  report.finalize();

  ordered_json r = report_head(cfg);
  r["n"] = n;
  ordered_json records = ordered_json::array();
  for (const auto& rec : report.records) {
    ordered_json e;
    e["test"] = rec.test;
    e["statistic"] = rec.statistic;
    e["threshold"] = rec.threshold;
    if (rec.p_value) e["p_value"] = *rec.p_value;
    e["pass"] = rec.pass;
    e["seed"] = rec.seed;
    e["n"] = rec.n;
    records.push_back(std::move(e));
  }
  r["records"] = std::move(records);
  r["pass"] = report.pass;
  write_text(cfg.out, r.dump(2) + "\n");
  if (!cfg.quiet)
    std::cout << (report.pass ? "diagnostics passed" : "diagnostics FAILED")
              << "\n";
  return report.pass ? 0 : 2;
}

// ---- check-copula ----------------------------------------------------

knockoff::ArchimedeanGenerator parse_gen(const json& j) {
  std::string name = j.value("generator", "");
  double theta = j.value("theta", 0.0);
  if (name == "clayton") return knockoff::clayton_generator(theta);
  if (name == "gumbel") return knockoff::gumbel_generator(theta);
  config_error("unknown generator '" + name + "'");
}

knockoff::Copula2 parse_copula2(const json& j) {
  std::string kind = j.value("kind", "");
  if (kind == "independence") return knockoff::Copula2::independence();
  if (kind == "w") return knockoff::Copula2::counter_monotone();
  if (kind == "m") return knockoff::Copula2::comonotone();
  if (kind == "gaussian")
    return knockoff::Copula2::gaussian(j.value("rho", 0.0));
  if (kind == "archimedean")
    return knockoff::Copula2::archimedean(parse_gen(j));
  config_error("unknown 2-copula kind '" + kind + "'");
}

knockoff::CopulaP parse_copula_p(const json& j, int p) {
  std::string kind = j.value("kind", "");
  if (kind == "independence") return knockoff::CopulaP::independence(p);
  if (kind == "w") {
    if (p != 2) config_error("outer 'w' copula requires p = 2");
    return knockoff::CopulaP::explicit_fn(2, [](const Vec& u) {
      return std::max(u[0] + u[1] - 1.0, 0.0);
    });
  }
  if (kind == "gaussian") {
    Mat corr(2, 2);
    double rho = j.value("rho", 0.0);
    corr << 1.0, rho, rho, 1.0;
    return knockoff::CopulaP::gaussian(corr);
  }
  if (kind == "archimedean")
    return knockoff::CopulaP::archimedean(p, parse_gen(j));
  config_error("unknown outer copula kind '" + kind + "'");
}

knockoff::Marginal parse_marginal_json(const json& j) {
  std::string type = j.value("type", "uniform");
  if (type == "uniform") return knockoff::uniform_marginal();
  if (type == "normal")
    return knockoff::normal_marginal(j.value("mu", 0.0), j.value("sd", 1.0));
  config_error("unknown marginal type '" + type + "'");
}

int run_check_copula(const RunConfig& cfg) {
  ordered_json r = report_head(cfg);
  bool all_ok = true;
  bool any_check = false;

  if (cfg.body.contains("copula")) {
    const json& cj = cfg.body["copula"];
    int p = cj.value("p", 0);
    if (p < 1) config_error("config field 'copula.p': must be >= 1");
    knockoff::CopulaModelSpec spec;
    spec.p = p;
    if (!cj.contains("c")) config_error("config field 'copula.c': missing");
    spec.c = parse_copula_p(cj["c"], p);
    if (!cj.contains("d") || !cj["d"].is_array() ||
        static_cast<int>(cj["d"].size()) != p)
      config_error("config field 'copula.d': need p link copulas");
    for (const auto& dj : cj["d"]) spec.d.push_back(parse_copula2(dj));
    if (cj.contains("marginals"))
      for (const auto& mj : cj["marginals"])
        spec.marginals.push_back(parse_marginal_json(mj));
    else
      for (int i = 0; i < p; ++i)
        spec.marginals.push_back(knockoff::uniform_marginal());

    int resolution = cfg.body.value("checks", json::object())
                         .value("rectangle_resolution", 8);
    auto vol = knockoff::rectangle_volume_check(spec, resolution);
    any_check = true;
    ordered_json v;
    v["resolution"] = vol.resolution;
    v["min_volume"] = vol.min_volume;
    v["nonnegative"] = vol.nonnegative;
    v["witness_cell"] = vol.witness_cell;
    std::vector<double> lo(vol.witness_lo.begin(), vol.witness_lo.end());
    std::vector<double> hi(vol.witness_hi.begin(), vol.witness_hi.end());
    v["witness_lo"] = lo;
    v["witness_hi"] = hi;
    r["rectangle_volumes"] = std::move(v);
    all_ok = all_ok && vol.nonnegative;
  }

  if (cfg.body.contains("generator")) {
    auto gen = parse_gen(cfg.body["generator"]);
    int order = cfg.body.value("checks", json::object()).value("order", 8);
    auto rep = knockoff::check_generator_conditions(gen, order);
    any_check = true;
    ordered_json g;
    g["generator"] = gen.name;
    g["theta"] = gen.theta;
    g["order"] = order;
    g["pass"] = rep.pass;
    g["inconclusive"] = rep.inconclusive;
    r["generator_conditions"] = std::move(g);
    all_ok = all_ok && rep.pass;
  }

  if (cfg.body.contains("nested")) {
    const json& nj = cfg.body["nested"];
    auto outer = parse_gen(nj.value("outer", json::object()));
    auto inner = parse_gen(nj.value("inner", json::object()));
    int order = nj.value("order", 8);
    auto rep = knockoff::check_nested_condition(outer, inner, order);
    any_check = true;
    ordered_json g;
    g["order"] = order;
    g["pass"] = rep.pass;
    g["inconclusive"] = rep.inconclusive;
    g["detail"] = rep.detail;
    r["nested_condition"] = std::move(g);
    all_ok = all_ok && rep.pass;
  }

  if (!any_check)
    config_error("check-copula: no 'copula', 'generator' or 'nested' section");
  r["pass"] = all_ok;
  write_text(cfg.out, r.dump(2) + "\n");
  if (!cfg.quiet)
    std::cout << (all_ok ? "copula checks passed" : "copula checks FAILED")
              << "\n";
  return all_ok ? 0 : 2;
}

// ---- filter-sim ------------------------------------------------------

int run_filter_sim(const RunConfig& cfg) {
  if (!cfg.body.contains("model")) config_error("config field 'model': missing");
  auto model = knockoff::parse_model(cfg.body["model"]);
  if (!cfg.body.contains("scenario"))
    config_error("config field 'scenario': missing");
  const json& sj = cfg.body["scenario"];

  knockoff::RegressionScenario sc;
  sc.n_obs = sj.value("n_obs", 0);
  sc.p = model.p;
  sc.noise_sd = sj.value("noise_sd", 1.0);
  sc.q = sj.value("q", 0.2);
  sc.plus = sj.value("plus", true);
  sc.beta = Vec::Zero(sc.p);
  if (sj.contains("beta")) {
    const auto& arr = sj["beta"];
    if (static_cast<int>(arr.size()) != sc.p)
      config_error("config field 'scenario.beta': length must equal p");
    for (int i = 0; i < sc.p; ++i) sc.beta[i] = arr[i].get<double>();
  } else {
    int nonnulls = sj.value("nonnulls", 0);
    double amplitude = sj.value("amplitude", 0.35);
    if (nonnulls < 0 || nonnulls > sc.p)
      config_error("config field 'scenario.nonnulls': out of range");
    for (int k = 0; k < nonnulls; ++k) {
      int idx = static_cast<int>(
          static_cast<long long>(k) * sc.p / std::max(nonnulls, 1));
      sc.beta[idx] = (k % 2 == 0) ? amplitude : -amplitude;
    }
  }
  int n_reps = sj.value("n_reps", 100);

  auto sampler = knockoff::model_covariate_sampler(model);
  auto report = knockoff::fdr_simulation(sc, sampler, n_reps, cfg.seed);

  ordered_json r = report_head(cfg);
  std::vector<double> beta(sc.beta.begin(), sc.beta.end());
  r["resolved_beta"] = beta;
  r["n_reps"] = report.n_reps;
  r["fdr"] = report.fdr;
  r["fdr_se"] = report.fdr_se;
  r["power"] = report.power;
  r["power_se"] = report.power_se;
  r["mean_selected"] = report.mean_selected;
  write_text(cfg.out, r.dump(2) + "\n");

  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "n_reps,fdr,fdr_se,power,power_se,mean_selected\n";
    os << report.n_reps << ',' << knockoff::format_double(report.fdr) << ','
       << knockoff::format_double(report.fdr_se) << ','
       << knockoff::format_double(report.power) << ','
       << knockoff::format_double(report.power_se) << ','
       << knockoff::format_double(report.mean_selected) << '\n';
    write_text(cfg.out + ".csv", os.str());
  }
  if (!cfg.quiet)
    std::cout << "fdr=" << report.fdr << " (se " << report.fdr_se
              << "), power=" << report.power << "\n";
  return 0;
}

// ---- tv-decay --------------------------------------------------------

int run_tv_decay(const RunConfig& cfg) {
  if (!cfg.body.contains("model")) config_error("config field 'model': missing");
  auto model = knockoff::parse_model(cfg.body["model"]);
  json tj = cfg.body.value("tv", json::object());
  std::vector<int> levels =
      tj.value("levels", std::vector<int>{2, 4, 8, 16, 32, 64});
  int bins = tj.value("bins", 20);
  long draws = tj.value("draws", 100000L);
  int n_boot = tj.value("bootstrap", 100);

  Mat x = knockoff::sample_x_model(model, static_cast<int>(draws), cfg.seed);
  Mat table(levels.size(), 3);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    knockoff::DiscretizationLevel level(levels[k]);
    Engine eng = knockoff::make_engine(cfg.seed, 7000 + k);
    Mat t(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Vec xi = x.row(i);
      t.row(i) = knockoff::discretize(xi, level, eng);
    }
    auto est = knockoff::empirical_tv_bootstrap(
        x, t, bins, n_boot, knockoff::derive_seed(cfg.seed, 8000 + k));
    table(k, 0) = levels[k];
    table(k, 1) = est.tv;
    table(k, 2) = est.bootstrap_se;
  }

  if (cfg.format == "csv") {
    std::ostringstream os;
    knockoff::write_csv(os, {"n", "tv", "bootstrap_se"}, table);
    write_text(cfg.out, os.str());
  } else {
    ordered_json r = report_head(cfg);
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      ordered_json e;
      e["n"] = static_cast<int>(table(i, 0));
      e["tv"] = table(i, 1);
      e["bootstrap_se"] = table(i, 2);
      rows.push_back(std::move(e));
    }
    r["table"] = std::move(rows);
    write_text(cfg.out, r.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knockoff construction and verification toolkit"};
  std::string config_path, seed_flag, out_flag;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")
      ->required();
  app.add_option("--seed", seed_flag, "seed override (decimal uint64)");
  app.add_option("--out", out_flag, "output path override");
  app.add_flag("--quiet", quiet, "suppress progress output");
  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path, seed_flag, out_flag);
    cfg.quiet = quiet;
    if (cfg.command == "sample") return run_sample(cfg);
    if (cfg.command == "diagnose") return run_diagnose(cfg);
    if (cfg.command == "check-copula") return run_check_copula(cfg);
    if (cfg.command == "filter-sim") return run_filter_sim(cfg);
    if (cfg.command == "tv-decay") return run_tv_decay(cfg);
    config_error("unknown command '" + cfg.command + "'");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
