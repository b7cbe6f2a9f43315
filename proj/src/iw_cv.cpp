#include "gsv/iw_cv.hpp"

#include <stdexcept>

namespace gsv {

std::pair<std::size_t, std::size_t> fold_bounds(std::size_t n, std::size_t k, std::size_t f) {
  if (k < 1 || f >= k || k > n) throw std::invalid_argument("fold_bounds: invalid fold geometry");
  return {f * n / k, (f + 1) * n / k};
}

IwCvResult iw_cv_select(const ReturnSeries& val, const WeightedSample& val_weights,
                        const WeightedSample& train_weights, const IwCvParams& params) {
  if (params.k_folds < 2) throw std::invalid_argument("iw_cv: need at least two folds");
  if (params.delta_grid.empty()) throw std::invalid_argument("iw_cv: empty radius grid");
  if (val_weights.size() != val.periods()) throw std::invalid_argument("iw_cv: validation weights length mismatch");
  check_alpha(params.alpha);

  const std::size_t n = val.periods();
  const std::size_t grid = params.delta_grid.size();
  const ReturnSeries& train = train_weights.series();

  IwCvResult res;
  res.rows.resize(grid);
  std::vector<double> lhs_sum(grid, 0.0);
  for (std::size_t g = 0; g < grid; ++g) res.rows[g].delta = params.delta_grid[g];

  for (std::size_t f = 0; f < params.k_folds; ++f) {
    const auto [lo, hi] = fold_bounds(n, params.k_folds, f);

    // Ratio model from the other folds, in time order.
    ReturnSeries rest = lo > 0 ? val.slice(0, lo) : val.slice(hi, n - hi);
    if (lo > 0 && hi < n) rest = rest.concat(val.slice(hi, n - hi));
    const auto [early, late] = split_early_late(rest, params.recent_fraction);
    const RatioModel model = fit_ratio_model(early, late, params.ratio);
    const WeightedSample fold_train = blended_training_weights(model, train, params.train_weight_blend);
    const Vector c = training_cost_vector(fold_train);

    const ReturnSeries held = val.slice(lo, hi - lo);
    const Vector w_held = val_weights.weights().segment(static_cast<Eigen::Index>(lo),
                                                        static_cast<Eigen::Index>(hi - lo));
    const WeightedSample held_sample = WeightedSample::normalized(held, w_held);

    for (std::size_t g = 0; g < grid; ++g) {
      const double delta = params.delta_grid[g];
      const ReformulationSolution sol =
          solve_reformulation(fold_train, delta, params.alpha, params.gamma, c, params.solver);
      if (sol.status != SolveStatus::optimal) continue;
      const PortfolioWeights x(sol.x);
      const double cvar = weighted_cvar(held_sample, x, params.alpha).h_w;
      lhs_sum[g] += robust_lhs(cvar, delta, params.alpha, x);
      ++res.rows[g].folds_solved;
    }
  }

  std::optional<std::size_t> pick;
  for (std::size_t g = 0; g < grid; ++g) {
    IwCvRow& row = res.rows[g];
    if (row.folds_solved > 0) row.mean_lhs = lhs_sum[g] / static_cast<double>(row.folds_solved);
    row.qualifies = row.folds_solved == params.k_folds && row.mean_lhs <= params.gamma;
    if (row.qualifies && !pick) pick = g;
  }
  if (!pick && params.fallback)
    for (std::size_t g = grid; g-- > 0;)
      if (res.rows[g].folds_solved == params.k_folds) {
        pick = g;
        break;
      }
  if (!pick) return res;

  const double delta = params.delta_grid[*pick];
  const Vector c = training_cost_vector(train_weights);
  const ReformulationSolution sol =
      solve_reformulation(train_weights, delta, params.alpha, params.gamma, c, params.solver);
  res.selected_delta = delta;
  if (sol.status != SolveStatus::optimal) return res;
  res.selected = make_candidate(sol.x, c, Provenance::grid, delta, 0);
  res.abstained = false;
  return res;
}

}  // namespace gsv
