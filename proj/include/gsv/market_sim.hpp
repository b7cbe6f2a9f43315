#pragma once

// Stationary Gaussian VAR(1) generator for the source law P and the shifted
// law Q, fold assembly for both scenarios, and the risk-budget calibration.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "gsv/core_risk.hpp"

namespace gsv {

struct ShiftConfig {
  Vector delta_mu;              // mu_Q = mu_P - delta_mu
  double vol_multiplier = 1.7;  // Sigma_Q = vol_multiplier^2 Sigma_P
  double phi = 0.45;
};

struct ScenarioConfig {
  std::size_t d = 8;
  Vector mu_p;
  Matrix sigma_p;  // innovation covariance
  double phi_p = 0.3;
  std::optional<ShiftConfig> shift;
  std::size_t n_train = 1000;
  std::size_t n_val = 1200;
  std::size_t n_test = 15000;
  double recent_fraction = 0.25;  // share of the validation fold drawn from Q in scenario 2
  double alpha = 0.05;
  double beta = 0.1;

  /// Throws if dimensions disagree, Sigma is not positive definite or |phi| >= 1.
  void validate() const;
};

/// xi_t = mu + phi (xi_{t-1} - mu) + eps_t, eps_t ~ N(0, Sigma), started from
/// the stationary law N(mu, Sigma / (1 - phi^2)).
ReturnSeries simulate_var1(const Vector& mu, const Matrix& sigma, double phi, std::size_t n,
                           std::uint64_t seed, Fold origin = Fold::train);

struct ScenarioFolds {
  ReturnSeries train;
  ReturnSeries validation;
  ReturnSeries test;
};

/// Scenario 1: every fold from P. Scenario 2: train from P, validation =
/// (n_val - m) rows from P followed by m = round(n_val * recent_fraction) rows
/// from Q, test from Q. Each fold segment has its own stream.
ScenarioFolds make_scenario(int scenario_id, const ScenarioConfig& config, std::uint64_t rep_seed);

/// (1 + margin) * empirical CVaR_alpha of the equal-weight portfolio loss.
double calibrate_gamma(const ReturnSeries& train, double alpha, double margin = 0.10);

/// Header "t,asset_1,...,asset_d"; t counts from 1.
void write_series_csv(std::ostream& out, const ReturnSeries& series);

/// Equicorrelated covariance with the given per-asset volatilities.
Matrix equicorrelated_covariance(const Vector& vol, double correlation);

}  // namespace gsv
