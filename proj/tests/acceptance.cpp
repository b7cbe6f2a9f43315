// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//
//   acceptance --config configs/default.json --unit-tests build/tests/unit_tests
//              --out build/acceptance_bench [--reps 100] [--seed 20240501]

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "gsv/bench.hpp"
#include "gsv/config.hpp"
#include "gsv/dro_solver.hpp"
#include "gsv/gs_validator.hpp"
#include "gsv/market_sim.hpp"
#include "gsv/report.hpp"
#include "gsv/rng.hpp"
#include "gsv/shift_weights.hpp"
#include "oracles.hpp"

using namespace gsv;
namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config;
  std::string unit_tests;
  std::string out = "acceptance_bench";
  std::size_t reps = 100;
  std::uint64_t seed = 20240501;
};

Args parse_args(int argc, char** argv) {
  Args a;
  for (int i = 1; i < argc; ++i) {
    const std::string key = argv[i];
    if (i + 1 >= argc) throw std::invalid_argument("missing value for " + key);
    const std::string value = argv[++i];
    if (key == "--config") a.config = value;
    else if (key == "--unit-tests") a.unit_tests = value;
    else if (key == "--out") a.out = value;
    else if (key == "--reps") a.reps = std::stoul(value);
    else if (key == "--seed") a.seed = std::stoull(value);
    else throw std::invalid_argument("unknown option " + key);
  }
  return a;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  failures += o.pass ? 0 : 1;
  std::cout << fmt::format("Criterion {}: {} {} ({})", id, o.pass ? "PASS" : "FAIL", name, o.detail) << std::endl;
}

Outcome oracle_cvar() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(1, 30);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> alpha_dist(0.01, 0.5);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto n = static_cast<std::size_t>(size(rng));
    std::vector<double> loss(n);
    for (auto& l : loss) l = nd(rng);
    const auto w = oracle::random_simplex(rng, n, k % 3 == 0);
    const double alpha = alpha_dist(rng);
    const double got = weighted_cvar(loss, w, alpha).h_w;
    worst = std::max(worst, std::abs(got - oracle::cvar_scan(loss, w, alpha)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 5.0, fmt::format("max error {:.3g}, {:.2f} s", worst, t)};
}

std::vector<Candidate> random_menu(std::size_t d, std::size_t count, const Vector& c, std::mt19937_64& rng) {
  std::vector<Candidate> menu;
  for (std::size_t j = 0; j < count; ++j) {
    const auto x = oracle::random_simplex(rng, d, j % 2 == 1);
    menu.push_back(make_candidate(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(d)), c,
                                  Provenance::dirichlet, 0.0, j));
  }
  return menu;
}

Outcome reduction(const BenchConfig& cfg) {
  std::mt19937_64 rng(2);
  int identical = 0;
  for (int k = 0; k < 20; ++k) {
    const ScenarioFolds f = make_scenario(1 + k % 2, cfg.market, derive_seed(2, {static_cast<std::uint64_t>(k)}));
    const double gamma = calibrate_gamma(f.train, cfg.market.alpha) * (0.9 + 0.02 * k);
    const std::vector<Candidate> menu =
        random_menu(cfg.market.d, 4 + k % 5, training_cost_vector(WeightedSample::uniform(f.train)), rng);
    ValidatorParams p;
    p.alpha = cfg.market.alpha;
    p.beta = cfg.market.beta;
    p.gamma = gamma;
    p.bootstrap_draws = cfg.bootstrap_draws;
    p.seed = derive_seed(3, {static_cast<std::uint64_t>(k)});
    const ValidationReport old = old_ngs_validate(menu, f.validation, p);
    p.block_length = 1;
    const ValidationReport fresh = validate_and_select(menu, WeightedSample::uniform(f.validation), p);
    identical += old == fresh;
  }
  return {identical == 20, fmt::format("{}/20 reports identical", identical)};
}

Outcome band_identity(const BenchConfig& cfg) {
  std::mt19937_64 rng(4);
  std::size_t checked = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const ScenarioFolds f = make_scenario(1, cfg.market, derive_seed(5, {r}));
    const auto [early, late] = split_early_late(f.validation, cfg.market.recent_fraction);
    const WeightedSample val = compute_weights(fit_ratio_model(early, late, cfg.ratio), f.validation);
    const double gamma = calibrate_gamma(f.train, cfg.market.alpha, cfg.gamma_margin) * (1.0 + 0.01 * (r % 20));
    const std::vector<Candidate> menu =
        random_menu(cfg.market.d, 16, training_cost_vector(WeightedSample::uniform(f.train)), rng);
    ValidatorParams p;
    p.alpha = cfg.market.alpha;
    p.beta = cfg.market.beta;
    p.gamma = gamma;
    p.delta_min = cfg.delta_min;
    p.delta_max = cfg.delta_max;
    p.bootstrap_draws = cfg.bootstrap_draws;
    p.seed = derive_seed(6, {r});
    const ValidationReport rep = validate_and_select(menu, val, p);
    for (const CandidateRow& row : rep.rows) {
      const double slack = gamma - row.h_w - row.band;
      if (!(slack > 0.0)) continue;
      const double unclipped = p.alpha * slack / row.norm2;
      if (unclipped < p.delta_min || unclipped > p.delta_max) continue;
      worst = std::max(worst, std::abs(row.upper_bound - gamma));
      if (!row.feasible) worst = std::max(worst, 1.0);
      ++checked;
    }
  }
  return {checked > 0 && worst <= 1e-9, fmt::format("{} unclipped candidates, max |U - gamma| = {:.3g}", checked, worst)};
}

Outcome gaussian_limit() {
  const std::size_t n = 5000, draws = 100000;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::vector<double> phi(n), w(n, 1.0 / n);
  double h = 0.0;
  for (auto& v : phi) {
    v = nd(rng);
    h += v / n;
  }
  double var = 0.0;
  for (double v : phi) var += (v - h) * (v - h) / n;
  const auto t0 = std::chrono::steady_clock::now();
  const Vector sums = block_sums(BlockPartition::make(n, 1), w, phi, h);
  const Matrix s = sums;
  const double q = gs_quantile(s, Vector::Constant(1, std::sqrt(var)), static_cast<double>(n), draws, 0.1, 8);
  const double t = seconds_since(t0);
  return {std::abs(q - 1.2816) <= 0.05 && t < 30.0, fmt::format("q = {:.4f}, {:.2f} s", q, t)};
}

Outcome certification(const BenchConfig& cfg) {
  std::size_t solved = 0, skipped = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 4; ++r) {
    const int scenario = 1 + static_cast<int>(r % 2);
    const ScenarioFolds f = make_scenario(scenario, cfg.market, derive_seed(9, {r}));
    const double gamma = calibrate_gamma(f.train, cfg.market.alpha, cfg.gamma_margin);
    const auto [early, late] = split_early_late(f.validation, cfg.market.recent_fraction);
    const RatioModel model = fit_ratio_model(early, late, cfg.ratio);
    for (const WeightedSample& train :
         {WeightedSample::uniform(f.train), blended_training_weights(model, f.train, cfg.train_weight_blend)}) {
      const Vector c = training_cost_vector(train);
      CandidateMenuConfig mc{cfg.delta_grid, 0, cfg.market.alpha, gamma, cfg.solver};
      for (double delta : cfg.delta_grid) {
        const ReformulationSolution sol = solve_grid_point(train, c, delta, mc);
        if (sol.status != SolveStatus::optimal) {
          ++skipped;
          continue;
        }
        worst = std::max({worst, sol.max_violation,
                          z_constraint_violation(train, delta, cfg.market.alpha, gamma, sol.x, sol.v, sol.r, sol.z)});
        ++solved;
      }
    }
  }

  std::mt19937_64 rng(10);
  double gap = 0.0;
  int matched = 0;
  for (int k = 0; k < 50; ++k) {
    std::uniform_int_distribution<int> size(4, 40);
    const auto n = static_cast<std::size_t>(size(rng));
    std::normal_distribution<double> safe(0.001, 0.01), risky(0.01, 0.08);
    Matrix m(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, 0) = risky(rng);
      m(i, 1) = safe(rng);
    }
    const auto w = oracle::random_simplex(rng, n);
    const double delta = k % 5 == 0 ? 0.0 : 0.002 * (k % 7);
    std::vector<double> r1(n), r2(n);
    for (std::size_t i = 0; i < n; ++i) {
      r1[i] = m(static_cast<Eigen::Index>(i), 0);
      r2[i] = m(static_cast<Eigen::Index>(i), 1);
    }
    // Budget strictly between the smallest and largest robust CVaR on the segment.
    double lo = 1e300, hi = -1e300;
    for (int g = 0; g <= 100; ++g) {
      const double s = g / 100.0;
      std::vector<double> loss(n);
      for (std::size_t i = 0; i < n; ++i) loss[i] = -(s * r1[i] + (1 - s) * r2[i]);
      const double v = oracle::cvar_scan(loss, w, 0.1, 0) + delta / 0.1 * std::hypot(s, 1 - s);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double gamma = lo + std::uniform_real_distribution<double>(0.1, 0.9)(rng) * (hi - lo);
    const WeightedSample sample(ReturnSeries(m, Fold::train), Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(n)));
    const Vector c = training_cost_vector(sample);
    const ReformulationSolution sol = solve_reformulation(sample, delta, 0.1, gamma, c);
    const auto ref = oracle::two_asset_sweep(r1, r2, w, 0.1, gamma, delta, c[0], c[1]);
    if (sol.status != SolveStatus::optimal || !std::isfinite(ref.objective)) continue;
    const double err = std::abs(sol.objective - ref.objective) - std::abs(c[0] - c[1]) * 1e-4;
    gap = std::max(gap, err);
    matched += err <= 1e-4;
  }
  const bool pass = solved > 0 && worst <= 1e-6 && matched == 50;
  return {pass, fmt::format("{} grid solutions (max violation {:.3g}, {} infeasible radii skipped); "
                            "d = 2 oracle {}/50, max excess error {:.3g}",
                            solved, worst, skipped, matched, std::max(gap, 0.0))};
}

Outcome simulator_moments() {
  const std::size_t n = 100000;
  Vector mu(2);
  mu << 0.01, -0.02;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 2.0;
  const double phi = 0.3;
  const ReturnSeries s = simulate_var1(mu, sigma, phi, n, 11);
  const Matrix& x = s.data();
  bool pass = true;
  std::string detail;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double stationary = sigma(j, j) / (1 - phi * phi);
    const double mean = x.col(j).mean();
    const Vector c = x.col(j).array() - mean;
    const double var = c.squaredNorm() / static_cast<double>(n - 1);
    const double ac = c.head(n - 1).dot(c.tail(n - 1)) / c.squaredNorm();
    const double se = std::sqrt(stationary * (1 + phi) / (1 - phi) / static_cast<double>(n));
    pass = pass && std::abs(mean - mu[j]) <= 4 * se && std::abs(var / stationary - 1) <= 0.02 && std::abs(ac - phi) <= 0.02;
    detail += fmt::format("{}asset {}: mean {:.4f}, var ratio {:.4f}, lag-1 {:.4f}", j ? "; " : "", j + 1, mean,
                          var / stationary, ac);
  }
  const ReturnSeries iid = simulate_var1(mu, sigma, 0.0, n, 12);
  const double m0 = iid.data().col(0).mean();
  pass = pass && std::abs(m0 - mu[0]) <= 4 * std::sqrt(sigma(0, 0) / static_cast<double>(n));
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  BenchConfig cfg;
  try {
    args = parse_args(argc, argv);
    cfg = args.config.empty() ? default_config() : load_config(args.config);
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }

  report(1, "weighted CVaR matches brute-force oracle", oracle_cvar);
  report(2, "uniform weights and unit blocks reduce to OLD-NGS bitwise", [&] { return reduction(cfg); });
  report(3, "validated bound equals the budget for unclipped radii", [&] { return band_identity(cfg); });
  report(4, "Gaussian-limit bootstrap quantile", gaussian_limit);

  BenchRun run;
  std::vector<SummaryRow> summary;
  bool bench_ok = false;
  std::string bench_error;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    run = run_benchmark(cfg, args.reps, {Method::new_method, Method::old_ngs, Method::iw_cv}, {1, 2}, 1, args.seed);
    summary = summarize(run.rows);
    fs::create_directories(args.out);
    {
      std::ofstream raw(fs::path(args.out) / "raw.csv");
      write_raw_csv(raw, run.rows);
    }
    emit_report(args.out, summary, ReportFormat::markdown, run.gamma);
    emit_report(args.out, summary, ReportFormat::csv, run.gamma);
    std::cout << fmt::format("Benchmark: R = {}, gamma = {:.5f}, {} failed replications, {:.1f} s, output in {}",
                             args.reps, run.gamma, run.failures, seconds_since(t0), args.out)
              << std::endl;
    bench_ok = true;
  } catch (const std::exception& e) {
    bench_error = e.what();
  }
  auto find = [&](Method m, int scenario) -> const SummaryRow& {
    if (!bench_ok) throw std::runtime_error("benchmark failed: " + bench_error);
    for (const auto& s : summary)
      if (s.method == m && s.scenario == scenario) return s;
    throw std::runtime_error("missing summary row");
  };

  report(5, "scenario-2 feasibility gap", [&] {
    const SummaryRow& n = find(Method::new_method, 2);
    const SummaryRow& o = find(Method::old_ngs, 2);
    const bool pass = n.feasibility >= 0.80 && o.feasibility <= 0.55 && n.feasibility - o.feasibility >= 0.25;
    return Outcome{pass, fmt::format("NEW {:.3f} over {} selected (abstention {:.2f}), OLD-NGS {:.3f} over {} selected",
                                     n.feasibility, n.selected, n.abstention_rate, o.feasibility, o.selected)};
  });
  report(6, "scenario-1 coverage", [&] {
    const SummaryRow& n = find(Method::new_method, 1);
    return Outcome{n.feasibility >= 0.85 && n.feasibility <= 0.97,
                   fmt::format("NEW feasibility {:.3f} over {} selected (abstention {:.2f})", n.feasibility, n.selected,
                               n.abstention_rate)};
  });
  report(7, "runtime ordering", [&] {
    const SummaryRow& n = find(Method::new_method, 1);
    const SummaryRow& o = find(Method::old_ngs, 1);
    const SummaryRow& c = find(Method::iw_cv, 1);
    const double ratio = c.runtime_median / n.runtime_median;
    const double rel = std::abs(n.runtime_median - o.runtime_median) / n.runtime_median;
    return Outcome{ratio >= 5.0 && rel <= 0.30,
                   fmt::format("scenario 1 medians NEW {:.3f} s, OLD-NGS {:.3f} s, IW-CV {:.3f} s; "
                               "IW-CV/NEW = {:.2f}, |NEW - OLD|/NEW = {:.2f}",
                               n.runtime_median, o.runtime_median, c.runtime_median, ratio, rel)};
  });
  report(8, "solver certification and d = 2 oracle", [&] { return certification(cfg); });
  report(9, "simulator moments", simulator_moments);
  report(10, "property suite", [&] {
    if (args.unit_tests.empty()) return Outcome{false, "no --unit-tests binary given"};
    const std::string cmd = args.unit_tests + " --gtest_brief=1 > " + (fs::path(args.out) / "unit_tests.log").string() + " 2>&1";
    fs::create_directories(args.out);
    const int rc = std::system(cmd.c_str());
    return Outcome{rc == 0, fmt::format("unit test binary exit status {}, log in {}/unit_tests.log", rc, args.out)};
  });

  std::cout << fmt::format("{} of 10 criteria passed", 10 - failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
