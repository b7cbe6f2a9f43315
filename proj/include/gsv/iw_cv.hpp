#pragma once

// Importance-weighted K-fold cross-validation over the radius grid.
//
// Folds are contiguous time blocks of the validation sample. For fold f the
// ratio model is refit on the other folds, training weights are rebuilt from
// it and the program is solved at every grid radius; the held-out fold is
// scored with the full validation weights restricted to it and renormalized.

#include <cstddef>
#include <optional>
#include <vector>

#include "gsv/core_risk.hpp"
#include "gsv/dro_solver.hpp"
#include "gsv/shift_weights.hpp"

namespace gsv {

struct IwCvParams {
  std::vector<double> delta_grid;
  std::size_t k_folds = 5;
  bool fallback = true;  // when none qualifies, use the largest radius solved on every fold
  double alpha = 0.05;
  double gamma = 0.0;
  double recent_fraction = 0.25;
  RatioModelConfig ratio;
  double train_weight_blend = 0.5;
  SolverConfig solver;
};

struct IwCvRow {
  double delta = 0.0;
  std::size_t folds_solved = 0;
  double mean_lhs = 0.0;  // over solved folds
  bool qualifies = false;  // solved on every fold and mean_lhs <= gamma
};

struct IwCvResult {
  std::vector<IwCvRow> rows;
  bool abstained = true;
  double selected_delta = 0.0;
  std::optional<Candidate> selected;
};

/// [begin, end) of fold f when n rows are cut into k contiguous folds.
std::pair<std::size_t, std::size_t> fold_bounds(std::size_t n, std::size_t k, std::size_t f);

/// `val_weights` are the validation weights of the full pipeline and
/// `train_weights` the training weights used for the final re-solve.
IwCvResult iw_cv_select(const ReturnSeries& val, const WeightedSample& val_weights,
                        const WeightedSample& train_weights, const IwCvParams& params);

}  // namespace gsv
