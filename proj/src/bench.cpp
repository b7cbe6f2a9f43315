#include "gsv/bench.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "gsv/gs_validator.hpp"
#include "gsv/iw_cv.hpp"
#include "gsv/rng.hpp"
#include "gsv/shift_weights.hpp"

namespace gsv {
namespace {

constexpr std::uint64_t kGammaStream = label_hash("gamma");
constexpr std::uint64_t kMenuStream = label_hash("menu");

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

struct MethodInputs {
  WeightedSample val;
  WeightedSample train;
};

MethodInputs build_weights(Method method, const ScenarioFolds& folds, const BenchConfig& cfg) {
  if (method == Method::old_ngs)
    return {WeightedSample::uniform(folds.validation), WeightedSample::uniform(folds.train)};
  const auto [early, late] = split_early_late(folds.validation, cfg.market.recent_fraction);
  const RatioModel model = fit_ratio_model(early, late, cfg.ratio);
  return {compute_weights(model, folds.validation),
          blended_training_weights(model, folds.train, cfg.train_weight_blend)};
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::new_method: return "new";
    case Method::old_ngs: return "old-ngs";
    case Method::iw_cv: return "iw-cv";
    case Method::iw_plugin: return "iw-plugin";
  }
  return "unknown";
}

std::string_view method_display(Method m) {
  switch (m) {
    case Method::new_method: return "NEW";
    case Method::old_ngs: return "OLD-NGS";
    case Method::iw_cv: return "IW-CV";
    case Method::iw_plugin: return "IW-plugin";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::new_method, Method::old_ngs, Method::iw_cv, Method::iw_plugin})
    if (name == method_name(m) || name == method_display(m)) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool ReplicationResult::same_outcome(const ReplicationResult& o) const {
  return method == o.method && scenario == o.scenario && rep == o.rep && abstained == o.abstained &&
         failed == o.failed && feasible == o.feasible && same_double(objective, o.objective) &&
         same_double(test_cvar, o.test_cvar) && same_double(robust_lhs, o.robust_lhs) &&
         same_double(delta_selected, o.delta_selected) && same_double(norm2, o.norm2) && outcome == o.outcome;
}

double benchmark_gamma(const BenchConfig& cfg, std::uint64_t master_seed) {
  if (cfg.gamma) return *cfg.gamma;
  const ReturnSeries train = simulate_var1(cfg.market.mu_p, cfg.market.sigma_p, cfg.market.phi_p,
                                           cfg.market.n_train, derive_seed(master_seed, {kGammaStream}));
  return calibrate_gamma(train, cfg.market.alpha, cfg.gamma_margin);
}

ReplicationResult run_replication(Method method, int scenario, const BenchConfig& cfg, double gamma,
                                  std::uint64_t master_seed, std::size_t rep) {
  ReplicationResult out;
  out.method = method;
  out.scenario = scenario;
  out.rep = rep;
  const double alpha = cfg.market.alpha;
  try {
    const ScenarioFolds folds =
        make_scenario(scenario, cfg.market, derive_seed(master_seed, {static_cast<std::uint64_t>(scenario), rep}));
    const std::uint64_t menu_seed = derive_seed(master_seed, {kMenuStream, static_cast<std::uint64_t>(scenario), rep});
    const std::uint64_t boot_seed =
        derive_seed(master_seed, {label_hash(method_name(method)), static_cast<std::uint64_t>(scenario), rep});

    const auto start = std::chrono::steady_clock::now();
    const MethodInputs in = build_weights(method, folds, cfg);
    std::optional<Candidate> chosen;
    double delta = 0.0;
    if (method == Method::iw_cv) {
      IwCvParams p;
      p.delta_grid = cfg.delta_grid;
      p.k_folds = cfg.k_folds;
      p.fallback = cfg.iw_cv_fallback;
      p.alpha = alpha;
      p.gamma = gamma;
      p.recent_fraction = cfg.market.recent_fraction;
      p.ratio = cfg.ratio;
      p.train_weight_blend = cfg.train_weight_blend;
      p.solver = cfg.solver;
      const IwCvResult r = iw_cv_select(folds.validation, in.val, in.train, p);
      out.outcome = r.abstained ? "abstain_no_certified_solution" : "selected";
      chosen = r.selected;
      delta = r.selected_delta;
    } else {
      CandidateMenuConfig mc{cfg.delta_grid, cfg.n_dirichlet, alpha, gamma, cfg.solver};
      const std::vector<Candidate> menu = generate_candidates(in.train, mc, menu_seed);
      ValidatorParams vp;
      vp.alpha = alpha;
      vp.beta = cfg.market.beta;
      vp.gamma = gamma;
      vp.delta_min = cfg.delta_min;
      vp.delta_max = cfg.delta_max;
      vp.bootstrap_draws = cfg.bootstrap_draws;
      vp.block_length = cfg.block_length;
      vp.n_eff_min = cfg.n_eff_min;
      vp.seed = boot_seed;
      ValidationReport report;
      if (method == Method::new_method) report = validate_and_select(menu, in.val, vp);
      else if (method == Method::old_ngs) report = old_ngs_validate(menu, folds.validation, vp);
      else report = iw_plugin_select(menu, in.val, vp);
      out.outcome = std::string(decision_name(report.decision));
      if (!report.abstained()) {
        chosen = menu[report.selected];
        delta = report.selected_delta;
      }
    }
    out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!chosen) {
      out.abstained = true;
      return out;
    }
    const Vector losses = portfolio_losses(folds.test, chosen->x);
    out.objective = chosen->objective;
    out.norm2 = chosen->norm2;
    out.delta_selected = delta;
    out.test_cvar = empirical_cvar(as_span(losses), alpha);
    out.robust_lhs = robust_lhs(out.test_cvar, delta, alpha, chosen->norm2);
    out.feasible = out.robust_lhs <= gamma;
  } catch (const std::exception& e) {
    out.failed = true;
    out.outcome = e.what();
    spdlog::error("replication {} scenario {} rep {} failed: {}", method_name(method), scenario, rep, e.what());
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& rows) {
  std::vector<std::pair<Method, int>> keys;
  for (const auto& r : rows)
    if (std::find(keys.begin(), keys.end(), std::pair{r.method, r.scenario}) == keys.end())
      keys.emplace_back(r.method, r.scenario);
  std::sort(keys.begin(), keys.end());

  std::vector<SummaryRow> out;
  for (const auto& [method, scenario] : keys) {
    SummaryRow s;
    s.method = method;
    s.scenario = scenario;
    std::vector<double> runtimes;
    double feas = 0, obj = 0, cvar = 0, lhs = 0, delta = 0;
    for (const auto& r : rows) {
      if (r.method != method || r.scenario != scenario) continue;
      ++s.reps;
      if (r.failed) {
        ++s.failed;
        continue;
      }
      runtimes.push_back(r.runtime_seconds);
      if (r.abstained) {
        ++s.abstained;
        continue;
      }
      ++s.selected;
      feas += r.feasible ? 1.0 : 0.0;
      obj += r.objective;
      cvar += r.test_cvar;
      lhs += r.robust_lhs;
      delta += r.delta_selected;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double k = static_cast<double>(s.selected);
    s.feasibility = s.selected ? feas / k : nan;
    s.objective = s.selected ? obj / k : nan;
    s.test_cvar = s.selected ? cvar / k : nan;
    s.robust_lhs = s.selected ? lhs / k : nan;
    s.delta = s.selected ? delta / k : nan;
    const std::size_t ran = s.reps - s.failed;
    s.abstention_rate = ran ? static_cast<double>(s.abstained) / static_cast<double>(ran) : nan;
    if (runtimes.empty()) {
      s.runtime_median = nan;
    } else {
      std::sort(runtimes.begin(), runtimes.end());
      const std::size_t m = runtimes.size();
      s.runtime_median = m % 2 ? runtimes[m / 2] : 0.5 * (runtimes[m / 2 - 1] + runtimes[m / 2]);
    }
    out.push_back(s);
  }
  return out;
}

BenchRun run_benchmark(const BenchConfig& cfg, std::size_t reps, const std::vector<Method>& methods,
                       const std::vector<int>& scenarios, std::size_t parallelism,
                       std::uint64_t master_seed) {
  if (reps < 1) throw std::invalid_argument("run_benchmark: need at least one replication");
  if (methods.empty()) throw std::invalid_argument("run_benchmark: empty method list");
  if (scenarios.empty()) throw std::invalid_argument("run_benchmark: empty scenario list");
  for (int s : scenarios)
    if (s != 1 && s != 2) throw std::invalid_argument("run_benchmark: scenarios must be 1 or 2");
  cfg.validate();

  BenchRun run;
  run.gamma = benchmark_gamma(cfg, master_seed);

  std::vector<std::tuple<Method, int, std::size_t>> tasks;
  for (Method m : methods)
    for (int s : scenarios)
      for (std::size_t r = 0; r < reps; ++r) tasks.emplace_back(m, s, r);
  std::sort(tasks.begin(), tasks.end());
  tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());

  run.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& [m, s, r] = tasks[i];
      run.rows[i] = run_replication(m, s, cfg, run.gamma, master_seed, r);
      const std::size_t k = ++done;
      if (k % 25 == 0 || k == tasks.size()) spdlog::info("{}/{} replications done", k, tasks.size());
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, tasks.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  for (const auto& r : run.rows) run.failures += r.failed ? 1 : 0;
  return run;
}

}  // namespace gsv
