#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gsv/config.hpp"
#include "gsv/dro_solver.hpp"
#include "gsv/market_sim.hpp"
#include "gsv/rng.hpp"
#include "gsv/simplex.hpp"
#include "oracles.hpp"

using namespace gsv;

namespace {

WeightedSample sample_from(const Matrix& m, const std::vector<double>& w) {
  return WeightedSample(ReturnSeries(m, Fold::train),
                        Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

std::vector<double> losses_of(const Matrix& m, const Vector& x) {
  const Vector l = -(m * x);
  return {l.data(), l.data() + l.size()};
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Two-asset instance where the budget cuts the segment between the vertices.
struct TwoAsset {
  Matrix m;
  std::vector<double> w;
  double gamma;
};

TwoAsset two_asset_instance(std::mt19937_64& rng, double delta) {
  std::uniform_int_distribution<int> size(4, 40);
  const auto n = static_cast<std::size_t>(size(rng));
  std::normal_distribution<double> safe(0.001, 0.01), risky(0.01, 0.08);
  TwoAsset t{Matrix(n, 2), oracle::random_simplex(rng, n), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    t.m(static_cast<Eigen::Index>(i), 0) = risky(rng);
    t.m(static_cast<Eigen::Index>(i), 1) = safe(rng);
  }
  // gamma between the robust CVaR of the best and worst grid points.
  double lo = 1e300, hi = -1e300;
  for (int k = 0; k <= 100; ++k) {
    const double s = k / 100.0;
    Vector x(2);
    x << s, 1 - s;
    const double v = oracle::cvar_scan(losses_of(t.m, x), t.w, 0.1, 0) + delta / 0.1 * x.norm();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  t.gamma = lo + std::uniform_real_distribution<double>(0.1, 0.9)(rng) * (hi - lo);
  return t;
}

}  // namespace

TEST(Simplex, Projection) {
  Vector v(3);
  v << 0.2, 0.3, 0.5;
  EXPECT_LE((project_to_simplex(v) - v).norm(), 1e-15);
  v << 2.0, 0.0, 0.0;
  Vector e(3);
  e << 1, 0, 0;
  EXPECT_LE((project_to_simplex(v) - e).norm(), 1e-15);
  v << 0.5, 0.5, 0.5;
  EXPECT_LE((project_to_simplex(v) - Vector::Constant(3, 1.0 / 3)).norm(), 1e-15);

  // Optimality against random simplex points.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 200; ++rep) {
    Vector y(5);
    for (auto& a : y) a = nd(rng);
    const Vector p = project_to_simplex(y);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    for (int k = 0; k < 20; ++k) {
      const auto q = oracle::random_simplex(rng, 5);
      EXPECT_LE((p - y).norm(), (Eigen::Map<const Vector>(q.data(), 5) - y).norm() + 1e-12);
    }
  }
}

TEST(TrainingCost, Examples) {
  Matrix m(3, 2);
  m << 0.01, 0.02, 0.01, 0.02, 0.01, 0.02;
  const Vector c = training_cost_vector(WeightedSample::uniform(ReturnSeries(m, Fold::train)));
  EXPECT_NEAR(c[0], -0.01, 1e-15);
  EXPECT_NEAR(c[1], -0.02, 1e-15);

  Matrix e(2, 2);
  e << 1, 0, 0, 1;
  const Vector c2 = training_cost_vector(sample_from(e, {1.0, 0.0}));
  EXPECT_EQ(c2[0], -1.0);
  EXPECT_EQ(c2[1], 0.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Matrix r(57, 6);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = nd(rng);
  const auto w = oracle::random_simplex(rng, 57);
  const Vector got = training_cost_vector(sample_from(r, w));
  for (int j = 0; j < 6; ++j) {
    double s = 0.0;
    for (int i = 0; i < 57; ++i) s -= w[static_cast<std::size_t>(i)] * r(i, j);
    EXPECT_NEAR(got[j], s, 1e-12);
  }
}

TEST(Solver, HugeBudgetPicksBestMeanVertex) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.02);
  Matrix m(200, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  m.col(3).array() += 0.01;
  const WeightedSample s = WeightedSample::uniform(ReturnSeries(m, Fold::train));
  const Vector c = training_cost_vector(s);
  const ReformulationSolution sol = solve_reformulation(s, 0.0, 0.05, 1e6, c);
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  Eigen::Index best;
  c.minCoeff(&best);
  EXPECT_EQ(sol.x[best], 1.0);
}

TEST(Solver, ImpossibleBudgetIsInfeasible) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 0.02);
  Matrix m(100, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  const WeightedSample s = WeightedSample::uniform(ReturnSeries(m, Fold::train));
  const ReformulationSolution sol = solve_reformulation(s, 0.01, 0.05, -1.0, training_cost_vector(s));
  EXPECT_EQ(sol.status, SolveStatus::infeasible);
  EXPECT_THROW(solve_reformulation(s, -0.1, 0.05, 1.0, training_cost_vector(s)), std::invalid_argument);
}

TEST(Solver, TwoAssetGridOracle) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const double delta = rep % 5 == 0 ? 0.0 : 0.002 * (rep % 7);
    const TwoAsset t = two_asset_instance(rng, delta);
    const WeightedSample s = sample_from(t.m, t.w);
    const Vector c = training_cost_vector(s);
    const ReformulationSolution sol = solve_reformulation(s, delta, 0.1, t.gamma, c);
    const auto ref = oracle::two_asset_sweep(to_std(t.m.col(0)), to_std(t.m.col(1)), t.w, 0.1, t.gamma, delta,
                                              c[0], c[1]);
    ASSERT_TRUE(std::isfinite(ref.objective)) << "rep " << rep;
    ASSERT_EQ(sol.status, SolveStatus::optimal) << "rep " << rep;
    // The grid oracle is itself off by at most |c1 - c2| * step.
    EXPECT_NEAR(sol.objective, ref.objective, 1e-4 + std::abs(c[0] - c[1]) * 1e-4) << "rep " << rep;
    ++checked;
  }
  EXPECT_EQ(checked, 50);
}

TEST(Solver, SolutionsAreCertified) {
  const BenchConfig cfg = default_config();
  const ScenarioFolds f = make_scenario(1, cfg.market, derive_seed(7, {1}));
  const WeightedSample s = WeightedSample::uniform(f.train);
  const double gamma = calibrate_gamma(f.train, 0.05);
  const Vector c = training_cost_vector(s);
  for (double delta : {0.0, 0.001, 0.004, 0.01}) {
    const ReformulationSolution sol = solve_reformulation(s, delta, 0.05, gamma, c);
    ASSERT_EQ(sol.status, SolveStatus::optimal);
    EXPECT_LE(sol.max_violation, 1e-6);
    EXPECT_LE(z_constraint_violation(s, delta, 0.05, gamma, sol.x, sol.v, sol.r, sol.z), 1e-6);
    EXPECT_NEAR(sol.v, sol.x.norm(), 1e-12);
    EXPECT_LE(sol.robust_lhs, gamma + 1e-9);
    EXPECT_NEAR(sol.x.sum(), 1.0, 1e-12);
    EXPECT_GE(sol.x.minCoeff(), 0.0);
  }
}

TEST(Solver, ObjectiveMonotoneInRadius) {
  const BenchConfig cfg = default_config();
  const ScenarioFolds f = make_scenario(1, cfg.market, derive_seed(8, {1}));
  const WeightedSample s = WeightedSample::uniform(f.train);
  const double gamma = calibrate_gamma(f.train, 0.05);
  const Vector c = training_cost_vector(s);
  double prev = -1e300;
  int solved = 0;
  for (double delta : log_spaced_grid(1e-4, 1.5e-2, 10)) {
    const ReformulationSolution sol = solve_reformulation(s, delta, 0.05, gamma, c);
    if (sol.status != SolveStatus::optimal) continue;
    EXPECT_GE(sol.objective, prev - 1e-6) << "delta " << delta;
    prev = sol.objective;
    ++solved;
  }
  EXPECT_GE(solved, 5);
}

TEST(Solver, LiftedSetEquivalence) {
  // For fixed x the lifted constraints are satisfiable iff the robust CVaR
  // constraint holds.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::uniform_int_distribution<int> size(2, 40);
  int agree = 0, total = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::size_t>(size(rng));
    const std::size_t d = 2 + rep % 4;
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    const auto w = oracle::random_simplex(rng, n);
    const auto xs = oracle::random_simplex(rng, d);
    const Vector x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(d));
    const double alpha = 0.1, delta = 0.005;
    const auto loss = losses_of(m, x);
    const double lhs = oracle::cvar_scan(loss, w, alpha, 0) + delta / alpha * x.norm();
    const double gamma = lhs + std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
    if (std::abs(gamma - lhs) < 1e-9) continue;
    const bool robust_ok = lhs <= gamma;
    const bool lifted_ok = oracle::lifted_slack(loss, w, alpha, gamma, delta, x.norm()) <= 1e-12;
    agree += robust_ok == lifted_ok;
    ++total;
    // The library's certificate point witnesses feasibility when it exists.
    if (robust_ok) {
      const WeightedSample s = sample_from(m, w);
      const CvarEstimate est = weighted_cvar(s, PortfolioWeights(x), alpha);
      Vector z(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) z[static_cast<Eigen::Index>(i)] = std::max(loss[i] - est.t_w, 0.0);
      EXPECT_LE(z_constraint_violation(s, delta, alpha, gamma, x, x.norm(), gamma - est.t_w, z), 1e-12);
    }
  }
  EXPECT_EQ(agree, total);
  EXPECT_GT(total, 150);
}

TEST(Candidates, DegenerateAndDirichletMenus) {
  const BenchConfig cfg = default_config();
  const ScenarioFolds f = make_scenario(1, cfg.market, derive_seed(10, {1}));
  const WeightedSample s = WeightedSample::uniform(f.train);
  const double gamma = calibrate_gamma(f.train, 0.05);

  CandidateMenuConfig only_saa{{0.0}, 0, 0.05, gamma, {}};
  const auto one = generate_candidates(s, only_saa, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].provenance, Provenance::grid);

  CandidateMenuConfig dir{{}, 5, 0.05, gamma, {}};
  const auto five = generate_candidates(s, dir, 2);
  ASSERT_EQ(five.size(), 5u);
  for (const auto& c : five) {
    EXPECT_EQ(c.provenance, Provenance::dirichlet);
    EXPECT_NEAR(c.x.values().sum(), 1.0, 1e-9);
    EXPECT_GE(c.x.values().minCoeff(), 0.0);
    EXPECT_NEAR(c.norm2, c.x.values().norm(), 1e-10);
    EXPECT_GE(c.norm2, 1.0 / std::sqrt(8.0) - 1e-12);
    EXPECT_LE(c.norm2, 1.0 + 1e-12);
  }
  // Same seed, same menu.
  const auto again = generate_candidates(s, dir, 2);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(again[j].x.values(), five[j].x.values());

  CandidateMenuConfig impossible{{0.01}, 0, 0.05, -1.0, {}};
  EXPECT_THROW(generate_candidates(s, impossible, 3), std::runtime_error);
  CandidateMenuConfig unsorted{{0.01, 0.001}, 0, 0.05, gamma, {}};
  EXPECT_THROW(generate_candidates(s, unsorted, 3), std::invalid_argument);
}

TEST(Candidates, DuplicatesAreDropped) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 0.02);
  Matrix m(100, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  m.col(0).array() += 0.05;
  const WeightedSample s = WeightedSample::uniform(ReturnSeries(m, Fold::train));
  // A loose budget: every radius returns the same vertex.
  CandidateMenuConfig cfg{{0.0, 0.001, 0.002}, 0, 0.05, 10.0, {}};
  EXPECT_EQ(generate_candidates(s, cfg, 1).size(), 1u);
}

TEST(Candidates, NormTendsToShrinkWithRadius) {
  const BenchConfig cfg = default_config();
  int monotone = 0;
  const int seeds = 100;
  const std::vector<double> grid{0.001, 0.005, 0.01, 0.02};
  for (int s = 0; s < seeds; ++s) {
    const ScenarioFolds f = make_scenario(1, cfg.market, derive_seed(12, {static_cast<std::uint64_t>(s)}));
    const WeightedSample w = WeightedSample::uniform(f.train);
    // A budget loose enough for the largest radius.
    const double gamma = 1.6 * calibrate_gamma(f.train, 0.05, 0.0);
    SolverConfig fast;
    fast.iterations = 1500;
    CandidateMenuConfig mc{grid, 0, 0.05, gamma, fast};
    const auto menu = generate_candidates(w, mc, 1);
    bool ok = menu.size() == grid.size();
    for (std::size_t j = 1; ok && j < menu.size(); ++j) ok = menu[j].norm2 <= menu[j - 1].norm2 + 1e-6;
    monotone += ok;
  }
  EXPECT_GE(monotone, 80);
}

TEST(Candidates, MenuCsv) {
  Vector x(2);
  x << 0.25, 0.75;
  Vector c(2);
  c << -1.0, -2.0;
  std::ostringstream out;
  write_candidate_menu_csv(out, {make_candidate(x, c, Provenance::grid, 0.005, 0)});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "id,provenance,delta,index,objective,norm2,x_1,x_2");
  const std::string row = out.str().substr(out.str().find('\n') + 1);
  EXPECT_EQ(row.rfind("0,grid,0.005", 0), 0u);
  EXPECT_NE(row.find(",0,-1.75,"), std::string::npos);
}

TEST(Candidates, LogSpacedGrid) {
  const auto g = log_spaced_grid(1e-3, 2e-2, 8);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-3);
  EXPECT_DOUBLE_EQ(g.back(), 2e-2);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_NEAR(g[i] * g[i], g[i - 1] * g[i + 1], 1e-15);
}
