#include "gsv/market_sim.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "gsv/rng.hpp"

namespace gsv {
namespace {

// Stream coordinates under a replication seed.
enum Stream : std::uint64_t { kTrain = 1, kValEarly = 2, kValLate = 3, kTest = 4 };

Matrix cholesky_factor(const Matrix& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance is not positive definite");
  return llt.matrixL();
}

void check_phi(double phi) {
  if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("autoregression coefficient must satisfy |phi| < 1");
}

}  // namespace

void ScenarioConfig::validate() const {
  const auto dd = static_cast<Eigen::Index>(d);
  if (d < 1) throw std::invalid_argument("scenario: need d >= 1");
  if (mu_p.size() != dd || sigma_p.rows() != dd || sigma_p.cols() != dd)
    throw std::invalid_argument("scenario: mu/Sigma dimensions must match d");
  if (!sigma_p.isApprox(sigma_p.transpose(), 1e-12)) throw std::invalid_argument("scenario: Sigma must be symmetric");
  cholesky_factor(sigma_p);
  check_phi(phi_p);
  if (shift) {
    if (shift->delta_mu.size() != dd) throw std::invalid_argument("scenario: shift delta_mu must have length d");
    if (!(shift->vol_multiplier > 0.0)) throw std::invalid_argument("scenario: vol multiplier must be positive");
    check_phi(shift->phi);
  }
  if (n_train < 1 || n_val < 1 || n_test < 1) throw std::invalid_argument("scenario: empty fold");
  check_alpha(alpha);
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("scenario: beta must lie in (0, 1)");
  if (!(recent_fraction > 0.0 && recent_fraction < 1.0))
    throw std::invalid_argument("scenario: recent_fraction must lie in (0, 1)");
}

ReturnSeries simulate_var1(const Vector& mu, const Matrix& sigma, double phi, std::size_t n,
                           std::uint64_t seed, Fold origin) {
  check_phi(phi);
  const Eigen::Index d = mu.size();
  if (sigma.rows() != d || sigma.cols() != d) throw std::invalid_argument("simulate_var1: dimension mismatch");
  if (n == 0) throw std::invalid_argument("simulate_var1: n must be positive");
  const Matrix l = cholesky_factor(sigma);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector eps(d);
  auto draw = [&] {
    for (Eigen::Index k = 0; k < d; ++k) eps[k] = normal(rng);
    return Vector(l.triangularView<Eigen::Lower>() * eps);
  };

  Matrix out(static_cast<Eigen::Index>(n), d);
  Vector dev = draw() / std::sqrt(1.0 - phi * phi);
  out.row(0) = (mu + dev).transpose();
  for (Eigen::Index t = 1; t < out.rows(); ++t) {
    dev = phi * dev + draw();
    out.row(t) = (mu + dev).transpose();
  }
  return ReturnSeries(std::move(out), origin);
}

ScenarioFolds make_scenario(int scenario_id, const ScenarioConfig& cfg, std::uint64_t rep_seed) {
  if (scenario_id != 1 && scenario_id != 2) throw std::invalid_argument("scenario id must be 1 or 2");
  cfg.validate();
  auto seed = [rep_seed](Stream s) { return derive_seed(rep_seed, {s}); };

  ReturnSeries train = simulate_var1(cfg.mu_p, cfg.sigma_p, cfg.phi_p, cfg.n_train, seed(kTrain), Fold::train);
  if (scenario_id == 1) {
    return {std::move(train),
            simulate_var1(cfg.mu_p, cfg.sigma_p, cfg.phi_p, cfg.n_val, seed(kValEarly), Fold::validation),
            simulate_var1(cfg.mu_p, cfg.sigma_p, cfg.phi_p, cfg.n_test, seed(kTest), Fold::test)};
  }
  if (!cfg.shift) throw std::invalid_argument("scenario 2 needs a shift configuration");
  const ShiftConfig& q = *cfg.shift;
  const Vector mu_q = cfg.mu_p - q.delta_mu;
  const Matrix sigma_q = q.vol_multiplier * q.vol_multiplier * cfg.sigma_p;
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_val) * cfg.recent_fraction));
  if (m == 0 || m >= cfg.n_val) throw std::invalid_argument("scenario 2: validation split leaves an empty window");

  ReturnSeries early = simulate_var1(cfg.mu_p, cfg.sigma_p, cfg.phi_p, cfg.n_val - m, seed(kValEarly), Fold::validation);
  ReturnSeries late = simulate_var1(mu_q, sigma_q, q.phi, m, seed(kValLate), Fold::validation);
  return {std::move(train), early.concat(late),
          simulate_var1(mu_q, sigma_q, q.phi, cfg.n_test, seed(kTest), Fold::test)};
}

double calibrate_gamma(const ReturnSeries& train, double alpha, double margin) {
  const Vector losses = portfolio_losses(train, PortfolioWeights::equal(train.assets()));
  return (1.0 + margin) * empirical_cvar(as_span(losses), alpha);
}

void write_series_csv(std::ostream& out, const ReturnSeries& series) {
  out << 't';
  for (std::size_t l = 0; l < series.assets(); ++l) out << ",asset_" << (l + 1);
  out << '\n';
  const Matrix& x = series.data();
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    out << (t + 1);
    for (Eigen::Index l = 0; l < x.cols(); ++l) out << fmt::format(",{:.17g}", x(t, l));
    out << '\n';
  }
}

Matrix equicorrelated_covariance(const Vector& vol, double correlation) {
  const Eigen::Index d = vol.size();
  Matrix s(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s(i, j) = vol[i] * vol[j] * (i == j ? 1.0 : correlation);
  return s;
}

}  // namespace gsv
