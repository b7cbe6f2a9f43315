#include "gsv/gs_validator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "gsv/kernels.hpp"
#include "gsv/rng.hpp"

namespace gsv {
namespace {

constexpr double kFeasTol = 1e-9;

enum class Mode { gaussian_supremum, plug_in };

// Work per draw above which the bootstrap is spread over hardware threads.
constexpr double kParallelWork = 2e6;

void bootstrap_range(const Matrix& s, const Vector& scale, std::uint64_t seed, std::size_t first,
                     std::size_t last, std::vector<double>& draws) {
  const auto k_blocks = static_cast<std::size_t>(s.rows());
  const auto p = static_cast<std::size_t>(s.cols());
  const auto& kern = kernels::active();
  std::vector<double> eps(k_blocks), proj(p);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = first; r < last; ++r) {
    Rng rng = make_rng(derive_seed(seed, {r}));
    normal.reset();
    for (double& e : eps) e = normal(rng);
    if (k_blocks > 0) kern.gemv_t(s.data(), k_blocks, p, eps.data(), proj.data());
    else std::fill(proj.begin(), proj.end(), 0.0);
    double t = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p; ++j) t = std::max(t, proj[j] * scale[static_cast<Eigen::Index>(j)]);
    draws[r] = t;
  }
}

ValidationReport run_validator(const std::vector<Candidate>& menu, const WeightedSample& val,
                               const ValidatorParams& params, Mode mode) {
  if (menu.empty()) throw std::invalid_argument("validator: empty candidate menu");
  check_alpha(params.alpha);
  if (!(params.beta > 0.0 && params.beta < 1.0)) throw std::invalid_argument("validator: beta must lie in (0, 1)");
  if (!(params.delta_min >= 0.0 && params.delta_max >= params.delta_min))
    throw std::invalid_argument("validator: need 0 <= delta_min <= delta_max");

  const std::size_t n = val.size();
  const auto p = static_cast<Eigen::Index>(menu.size());
  ValidationReport report;
  report.block_length = params.block_length ? params.block_length : default_block_length(n);
  report.n_eff = val.n_eff();
  const BlockPartition part = BlockPartition::make(n, report.block_length);

  Matrix sums(static_cast<Eigen::Index>(part.blocks), p);
  Vector sigma(p);
  report.rows.resize(menu.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    const Candidate& cand = menu[static_cast<std::size_t>(j)];
    const CvarEstimate est = candidate_scores(val, cand.x, params.alpha);
    CandidateRow& row = report.rows[static_cast<std::size_t>(j)];
    row.id = static_cast<std::size_t>(j);
    row.t_w = est.t_w;
    row.h_w = est.h_w;
    row.sigma_w = est.sigma_w;
    row.objective = cand.objective;
    row.norm2 = cand.norm2;
    sigma[j] = floored_sigma(est.sigma_w);
    if (mode == Mode::gaussian_supremum)
      sums.col(j) = block_sums(part, as_span(val.weights()), as_span(est.scores), est.h_w);
  }

  if (mode == Mode::gaussian_supremum)
    report.q_hat = gs_quantile(sums, sigma, report.n_eff, params.bootstrap_draws, params.beta, params.seed);

  for (CandidateRow& row : report.rows) {
    const double s = mode == Mode::plug_in ? 0.0 : floored_sigma(row.sigma_w);
    row.band = report.q_hat * s / std::sqrt(report.n_eff);
    row.delta_star = analytical_radius(row.h_w, s, report.q_hat, report.n_eff, params.gamma,
                                       params.alpha, row.norm2, params.delta_min, params.delta_max);
    row.upper_bound = validated_upper_bound(row.h_w, s, report.q_hat, report.n_eff, row.delta_star,
                                            params.alpha, row.norm2);
    row.feasible = row.upper_bound <= params.gamma + kFeasTol;
  }

  if (report.n_eff < params.n_eff_min) {
    report.decision = Decision::abstain_n_eff_collapse;
    return report;
  }
  const CandidateRow* best = nullptr;
  for (const CandidateRow& row : report.rows) {
    if (!row.feasible) continue;
    if (best == nullptr || row.delta_star < best->delta_star ||
        (row.delta_star == best->delta_star && row.objective < best->objective))
      best = &row;
  }
  if (best == nullptr) {
    report.decision = Decision::abstain_empty_feasible_set;
    return report;
  }
  report.decision = Decision::selected;
  report.selected = best->id;
  report.selected_delta = best->delta_star;
  return report;
}

}  // namespace

BlockPartition BlockPartition::make(std::size_t n, std::size_t block_length) {
  if (block_length < 1 || block_length > n)
    throw std::invalid_argument("BlockPartition: block length must lie in [1, n]");
  BlockPartition p;
  p.n = n;
  p.block_length = block_length;
  p.blocks = n / block_length;
  p.discarded_tail = n - p.blocks * block_length;
  return p;
}

std::size_t default_block_length(std::size_t n) {
  const auto b = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
  return std::max<std::size_t>(b, 1);
}

Vector block_sums(const BlockPartition& partition, std::span<const double> w,
                  std::span<const double> scores, double h_w) {
  if (w.size() != partition.n || scores.size() != partition.n)
    throw std::invalid_argument("block_sums: partition built for a different length");
  Vector s(static_cast<Eigen::Index>(partition.blocks));
  for (std::size_t k = 0; k < partition.blocks; ++k) {
    double acc = 0.0;
    for (std::size_t i = partition.begin(k); i < partition.end(k); ++i) acc += w[i] * (scores[i] - h_w);
    s[static_cast<Eigen::Index>(k)] = acc;
  }
  return s;
}

GsCalibration gs_calibrate(const Matrix& block_sums, const Vector& sigma, double n_eff,
                           std::size_t bootstrap_draws, double beta, std::uint64_t seed) {
  if (block_sums.cols() == 0) throw std::invalid_argument("gs_calibrate: empty menu");
  if (sigma.size() != block_sums.cols()) throw std::invalid_argument("gs_calibrate: sigma length mismatch");
  if (bootstrap_draws < 100) throw std::invalid_argument("gs_calibrate: need at least 100 draws");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("gs_calibrate: beta must lie in (0, 1)");
  if (!(n_eff >= 1.0)) throw std::invalid_argument("gs_calibrate: n_eff must be at least 1");

  GsCalibration cal;
  cal.block_sums = block_sums;
  cal.multiplier_seed = seed;
  cal.draws.resize(bootstrap_draws);
  Vector scale(sigma.size());
  for (Eigen::Index j = 0; j < sigma.size(); ++j) scale[j] = std::sqrt(n_eff) / floored_sigma(sigma[j]);

  const double work = static_cast<double>(bootstrap_draws) * static_cast<double>(block_sums.size());
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      work > kParallelWork ? std::min<std::size_t>(hw, bootstrap_draws / 100 + 1) : std::size_t{1};
  if (workers <= 1) {
    bootstrap_range(block_sums, scale, seed, 0, bootstrap_draws, cal.draws);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (bootstrap_draws + workers - 1) / workers;
    for (std::size_t t = 0; t < workers; ++t) {
      const std::size_t first = t * chunk, last = std::min(bootstrap_draws, first + chunk);
      if (first >= last) break;
      pool.emplace_back([&, first, last] { bootstrap_range(block_sums, scale, seed, first, last, cal.draws); });
    }
  }

  std::vector<double> sorted = cal.draws;
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::ceil(static_cast<double>(bootstrap_draws) * (1.0 - beta) - 1e-9);
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(pos), 1, bootstrap_draws);
  cal.q_hat = sorted[k - 1];
  return cal;
}

double gs_quantile(const Matrix& block_sums, const Vector& sigma, double n_eff,
                   std::size_t bootstrap_draws, double beta, std::uint64_t seed) {
  return gs_calibrate(block_sums, sigma, n_eff, bootstrap_draws, beta, seed).q_hat;
}

double analytical_radius(double h_w, double sigma_w, double q_hat, double n_eff, double gamma,
                         double alpha, double norm2, double delta_min, double delta_max) {
  if (!(norm2 > 0.0)) throw std::invalid_argument("analytical_radius: norm must be positive");
  if (delta_min > delta_max) throw std::invalid_argument("analytical_radius: delta_min > delta_max");
  const double slack = gamma - h_w - q_hat * sigma_w / std::sqrt(n_eff);
  return std::clamp(alpha * std::max(slack, 0.0) / norm2, delta_min, delta_max);
}

double validated_upper_bound(double h_w, double sigma_w, double q_hat, double n_eff, double delta,
                             double alpha, double norm2) {
  if (!(delta >= 0.0)) throw std::invalid_argument("validated_upper_bound: negative delta");
  return h_w + (delta / alpha) * norm2 + q_hat * sigma_w / std::sqrt(n_eff);
}

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::selected: return "selected";
    case Decision::abstain_empty_feasible_set: return "abstain_empty_feasible_set";
    case Decision::abstain_n_eff_collapse: return "abstain_n_eff_collapse";
  }
  return "unknown";
}

CvarEstimate candidate_scores(const WeightedSample& sample, const PortfolioWeights& x, double alpha) {
  return weighted_cvar(sample, x, alpha);
}

ValidationReport validate_and_select(const std::vector<Candidate>& menu, const WeightedSample& val,
                                     const ValidatorParams& params) {
  return run_validator(menu, val, params, Mode::gaussian_supremum);
}

ValidationReport old_ngs_validate(const std::vector<Candidate>& menu, const ReturnSeries& val,
                                  const ValidatorParams& params) {
  ValidatorParams p = params;
  p.block_length = 1;
  return run_validator(menu, WeightedSample::uniform(val), p, Mode::gaussian_supremum);
}

ValidationReport iw_plugin_select(const std::vector<Candidate>& menu, const WeightedSample& val,
                                  const ValidatorParams& params) {
  return run_validator(menu, val, params, Mode::plug_in);
}

void write_validation_report_csv(std::ostream& out, const ValidationReport& r) {
  out << "row_type,id,t_w,h_w,sigma_w,band,delta_star,upper_bound,objective,norm2,feasible,"
         "q_hat,n_eff,block_length,decision\n";
  for (const CandidateRow& c : r.rows)
    out << fmt::format("candidate,{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},,,,\n",
                       c.id, c.t_w, c.h_w, c.sigma_w, c.band, c.delta_star, c.upper_bound, c.objective,
                       c.norm2, c.feasible ? 1 : 0);
  const bool sel = r.decision == Decision::selected;
  out << fmt::format("decision,{},,,,,{},,,,,{:.17g},{:.17g},{},{}\n", sel ? fmt::format("{}", r.selected) : "",
                     sel ? fmt::format("{:.17g}", r.selected_delta) : "", r.q_hat, r.n_eff, r.block_length,
                     decision_name(r.decision));
}

}  // namespace gsv
