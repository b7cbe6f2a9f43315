#pragma once

// Candidate generation: the weighted Wasserstein-CVaR program
//
//   min c.x  s.t.  x in simplex,  weighted_cvar(-X x) + (delta/alpha)||x||_2 <= gamma
//
// solved for a grid of radii, plus a random Dirichlet menu.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "gsv/core_risk.hpp"

namespace gsv {

enum class SolveStatus { optimal, infeasible, max_iter };

std::string_view status_name(SolveStatus s);

struct SolverConfig {
  std::size_t iterations = 5000;
  double eta0 = 0.1;
  double penalty_factor = 100.0;  // rho = penalty_factor * ||c||_2
  double certify_tol = 1e-6;
};

/// Point of the lifted set Z: x with v = ||x||, r = gamma - t_w, z_i = (l_i - t_w)_+.
struct ReformulationSolution {
  Vector x;
  double v = 0.0;
  double r = 0.0;
  Vector z;
  SolveStatus status = SolveStatus::max_iter;
  double objective = 0.0;
  double robust_lhs = 0.0;
  double max_violation = 0.0;  // largest Z-constraint violation, from certification
  std::size_t iterations = 0;
};

/// c = -sum_i w_i xi_i
Vector training_cost_vector(const WeightedSample& sample);

/// Largest violation of the Z constraints at (x, v, r, z), including the
/// simplex and sign constraints. Zero means exactly feasible.
double z_constraint_violation(const WeightedSample& sample, double delta, double alpha,
                              double gamma, const Vector& x, double v, double r, const Vector& z);

ReformulationSolution solve_reformulation(const WeightedSample& sample, double delta,
                                          double alpha, double gamma, const Vector& c,
                                          const SolverConfig& config = {});

enum class Provenance { grid, dirichlet };

struct Candidate {
  PortfolioWeights x;
  Provenance provenance;
  double delta = 0.0;      // grid radius (grid candidates only)
  std::size_t index = 0;   // Dirichlet draw index (menu candidates only)
  double objective = 0.0;  // c.x
  double norm2 = 0.0;
};

struct CandidateMenuConfig {
  std::vector<double> delta_grid;
  std::size_t n_dirichlet = 8;
  double alpha = 0.05;
  double gamma = 0.0;
  SolverConfig solver;
};

/// Grid candidates for every feasible radius (infeasible ones are skipped with
/// a warning) followed by the Dirichlet(1,...,1) draws. Candidates within 1e-6
/// in the sup norm of an earlier one are dropped. Throws if nothing is left.
std::vector<Candidate> generate_candidates(const WeightedSample& train,
                                           const CandidateMenuConfig& config,
                                           std::uint64_t seed);

/// The grid part for a single radius; empty optional-like result signalled by
/// a non-optimal status.
ReformulationSolution solve_grid_point(const WeightedSample& train, const Vector& c,
                                       double delta, const CandidateMenuConfig& config);

Candidate make_candidate(const Vector& x, const Vector& c, Provenance provenance,
                         double delta, std::size_t index);

/// Sorted, `count` points log-spaced on [lo, hi].
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count);

/// One record per candidate: id, provenance, delta, index, objective, norm2, x_1..x_d.
void write_candidate_menu_csv(std::ostream& out, const std::vector<Candidate>& menu);

}  // namespace gsv
