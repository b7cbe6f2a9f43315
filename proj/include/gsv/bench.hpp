#pragma once

// Monte Carlo benchmark: replications of both scenarios for each method,
// aggregated into the summary table.
//
// Seeds: the data folds and the Dirichlet menu of replication (scenario, rep)
// come from streams keyed by (master, scenario, rep), so every method sees the
// same data. The bootstrap multipliers are keyed by (master, method, scenario,
// rep).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "gsv/config.hpp"

namespace gsv {

enum class Method { new_method, old_ngs, iw_cv, iw_plugin };

std::string_view method_name(Method m);     // new, old-ngs, iw-cv, iw-plugin
std::string_view method_display(Method m);  // NEW, OLD-NGS, IW-CV, IW-plugin
Method parse_method(std::string_view name);

// Metrics that do not exist for abstained or failed replications.
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct ReplicationResult {
  Method method = Method::new_method;
  int scenario = 1;
  std::size_t rep = 0;
  bool abstained = false;
  bool failed = false;
  bool feasible = false;
  double objective = kUndefined;
  double test_cvar = kUndefined;
  double robust_lhs = kUndefined;
  double delta_selected = kUndefined;
  double norm2 = kUndefined;
  std::string outcome;  // decision name, or the error message of a failed replication
  double runtime_seconds = 0.0;

  /// Equality on everything except the runtime.
  bool same_outcome(const ReplicationResult& o) const;
};

/// The override from the config, or (1 + margin) times the equal-weight CVaR
/// of one scenario-1 training fold drawn from a stream keyed by the master seed.
double benchmark_gamma(const BenchConfig& config, std::uint64_t master_seed);

ReplicationResult run_replication(Method method, int scenario, const BenchConfig& config,
                                  double gamma, std::uint64_t master_seed, std::size_t rep);

struct SummaryRow {
  Method method = Method::new_method;
  int scenario = 1;
  std::size_t reps = 0;
  std::size_t selected = 0;  // neither abstained nor failed
  std::size_t abstained = 0;
  std::size_t failed = 0;
  double feasibility = 0.0;  // means below are over selected replications
  double objective = 0.0;
  double test_cvar = 0.0;
  double robust_lhs = 0.0;
  double delta = 0.0;
  double runtime_median = 0.0;  // over non-failed replications
  double abstention_rate = 0.0;  // abstained / (reps - failed)
};

/// One row per (method, scenario) present, in (method, scenario) order.
std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& rows);

struct BenchRun {
  double gamma = 0.0;
  std::vector<ReplicationResult> rows;  // sorted by (method, scenario, rep)
  std::size_t failures = 0;
};

BenchRun run_benchmark(const BenchConfig& config, std::size_t reps, const std::vector<Method>& methods,
                       const std::vector<int>& scenarios, std::size_t parallelism,
                       std::uint64_t master_seed);

}  // namespace gsv
