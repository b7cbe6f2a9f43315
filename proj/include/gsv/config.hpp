#pragma once

// Benchmark configuration: market law, risk parameters and every tuning knob
// of the ratio model, solver, validator and IW-CV baseline. Stored as JSON;
// missing keys take the defaults below, unknown keys are rejected.

#include <cstddef>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gsv/dro_solver.hpp"
#include "gsv/market_sim.hpp"
#include "gsv/shift_weights.hpp"

namespace gsv {

struct BenchConfig {
  ScenarioConfig market;
  std::optional<double> gamma;  // fixed budget; calibrated when absent
  double gamma_margin = 0.10;

  RatioModelConfig ratio;
  double train_weight_blend = 0.5;

  std::size_t bootstrap_draws = 800;
  std::size_t block_length = 0;  // 0: round(n_val^(1/3))
  double n_eff_min = 30.0;
  double delta_min = 1e-3;
  double delta_max = 2e-2;

  std::vector<double> delta_grid;
  std::size_t n_dirichlet = 8;
  SolverConfig solver;

  std::size_t k_folds = 5;
  bool iw_cv_fallback = true;

  void validate() const;
};

/// The frozen defaults shipped in configs/default.json.
BenchConfig default_config();

BenchConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const BenchConfig& cfg);
BenchConfig load_config(const std::string& path);

}  // namespace gsv
