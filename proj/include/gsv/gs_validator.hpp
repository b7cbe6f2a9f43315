#pragma once

// Gaussian-supremum validation of a candidate menu: block multiplier bootstrap
// of the studentized max statistic, analytical radius, feasibility filter and
// least-conservative selection with abstention.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "gsv/core_risk.hpp"
#include "gsv/dro_solver.hpp"

namespace gsv {

/// K = floor(n / b) contiguous blocks of length b; the tail is dropped.
struct BlockPartition {
  std::size_t n = 0;
  std::size_t block_length = 1;
  std::size_t blocks = 0;
  std::size_t discarded_tail = 0;

  static BlockPartition make(std::size_t n, std::size_t block_length);

  std::size_t begin(std::size_t k) const { return k * block_length; }
  std::size_t end(std::size_t k) const { return (k + 1) * block_length; }
};

/// round(n^(1/3)), at least 1.
std::size_t default_block_length(std::size_t n);

/// S_k = sum_{i in B_k} w_i (phi_i - h_w)
Vector block_sums(const BlockPartition& partition, std::span<const double> w,
                  std::span<const double> scores, double h_w);

struct GsCalibration {
  double q_hat = 0.0;
  std::vector<double> draws;  // T^(r), r = 0..B-1, in draw order
  Matrix block_sums;          // K x p
  std::uint64_t multiplier_seed = 0;
};

/// T^(r) = max_j (sqrt(n_eff) / sigma_j) sum_k eps_k^(r) S_kj with
/// eps^(r) ~ N(0, I_K) drawn from a stream keyed by (seed, r). Returns the
/// ceil(B(1-beta))-th order statistic of the draws.
GsCalibration gs_calibrate(const Matrix& block_sums, const Vector& sigma, double n_eff,
                           std::size_t bootstrap_draws, double beta, std::uint64_t seed);

double gs_quantile(const Matrix& block_sums, const Vector& sigma, double n_eff,
                   std::size_t bootstrap_draws, double beta, std::uint64_t seed);

/// clip(alpha [gamma - h - q sigma / sqrt(n_eff)]_+ / norm2, delta_min, delta_max)
double analytical_radius(double h_w, double sigma_w, double q_hat, double n_eff, double gamma,
                         double alpha, double norm2, double delta_min, double delta_max);

/// h + (delta / alpha) norm2 + q sigma / sqrt(n_eff)
double validated_upper_bound(double h_w, double sigma_w, double q_hat, double n_eff,
                             double delta, double alpha, double norm2);

struct ValidatorParams {
  double alpha = 0.05;
  double beta = 0.1;
  double gamma = 0.0;
  double delta_min = 1e-3;
  double delta_max = 2e-2;
  std::size_t bootstrap_draws = 800;
  std::size_t block_length = 0;  // 0: default_block_length(n)
  double n_eff_min = 30.0;
  std::uint64_t seed = 0;
};

enum class Decision { selected, abstain_empty_feasible_set, abstain_n_eff_collapse };

std::string_view decision_name(Decision d);

struct CandidateRow {
  std::size_t id = 0;
  double t_w = 0.0;
  double h_w = 0.0;
  double sigma_w = 0.0;
  double band = 0.0;  // q sigma / sqrt(n_eff)
  double delta_star = 0.0;
  double upper_bound = 0.0;
  double objective = 0.0;
  double norm2 = 0.0;
  bool feasible = false;

  bool operator==(const CandidateRow&) const = default;
};

struct ValidationReport {
  std::vector<CandidateRow> rows;
  double q_hat = 0.0;
  double n_eff = 0.0;
  std::size_t block_length = 1;
  Decision decision = Decision::abstain_empty_feasible_set;
  std::size_t selected = 0;  // candidate id, meaningful when decision == selected
  double selected_delta = 0.0;

  bool abstained() const { return decision != Decision::selected; }
  bool operator==(const ValidationReport&) const = default;
};

CvarEstimate candidate_scores(const WeightedSample& sample, const PortfolioWeights& x, double alpha);

/// Full pipeline with the validation weights of `val`.
ValidationReport validate_and_select(const std::vector<Candidate>& menu, const WeightedSample& val,
                                     const ValidatorParams& params);

/// Uniform weights and unit blocks.
ValidationReport old_ngs_validate(const std::vector<Candidate>& menu, const ReturnSeries& val,
                                  const ValidatorParams& params);

/// No bootstrap and no band: q = 0, sigma = 0.
ValidationReport iw_plugin_select(const std::vector<Candidate>& menu, const WeightedSample& val,
                                  const ValidatorParams& params);

/// One row per candidate, then a decision row.
void write_validation_report_csv(std::ostream& out, const ValidationReport& report);

}  // namespace gsv
