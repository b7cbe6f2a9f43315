#include "gsv/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>

namespace gsv {
namespace {

using nlohmann::json;

Vector linspace(double lo, double hi, std::size_t n) {
  if (n == 1) return Vector::Constant(1, lo);
  return Vector::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const json& a) {
  const auto v = a.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* section) {
  if (!j.is_object()) throw std::invalid_argument(std::string("config: section '") + section + "' must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument(std::string("config: unknown key '") + k + "' in '" + section + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// A vector given either as an explicit array or as a scalar broadcast.
Vector vector_or_scalar(const json& v, std::size_t d) {
  if (v.is_number()) return Vector::Constant(static_cast<Eigen::Index>(d), v.get<double>());
  return to_vector(v);
}

}  // namespace

void BenchConfig::validate() const {
  market.validate();
  if (gamma && !std::isfinite(*gamma)) throw std::invalid_argument("config: gamma must be finite");
  if (!(gamma_margin > -1.0)) throw std::invalid_argument("config: gamma_margin must exceed -1");
  if (!(ratio.clip_lo > 0.0 && ratio.clip_hi >= ratio.clip_lo)) throw std::invalid_argument("config: invalid odds clip");
  if (!(train_weight_blend >= 0.0 && train_weight_blend <= 1.0))
    throw std::invalid_argument("config: train_weight_blend must lie in [0, 1]");
  if (bootstrap_draws < 100) throw std::invalid_argument("config: bootstrap_draws must be at least 100");
  if (!(delta_min >= 0.0 && delta_max >= delta_min)) throw std::invalid_argument("config: need 0 <= delta_min <= delta_max");
  if (delta_grid.empty()) throw std::invalid_argument("config: empty delta grid");
  for (std::size_t i = 0; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] >= 0.0) || (i > 0 && delta_grid[i] < delta_grid[i - 1]))
      throw std::invalid_argument("config: delta grid must be nonnegative and ascending");
  if (k_folds < 2) throw std::invalid_argument("config: k_folds must be at least 2");
  if (solver.iterations < 1) throw std::invalid_argument("config: solver iterations must be positive");
}

BenchConfig default_config() {
  BenchConfig c;
  ScenarioConfig& m = c.market;
  m.d = 8;
  m.mu_p = linspace(0.0005, 0.01, m.d);
  m.sigma_p = equicorrelated_covariance(linspace(0.005, 0.3, m.d), 0.3);
  m.phi_p = 0.3;
  m.shift = ShiftConfig{Vector::Constant(static_cast<Eigen::Index>(m.d), 0.003), 1.7, 0.45};
  c.delta_grid = log_spaced_grid(1e-3, 2e-2, 8);
  return c;
}

BenchConfig config_from_json(const json& j) {
  reject_unknown(j, {"market", "risk", "ratio", "validator", "candidates", "solver", "iw_cv"}, "root");
  BenchConfig c = default_config();
  ScenarioConfig& m = c.market;

  if (j.contains("market")) {
    const json& mj = j.at("market");
    reject_unknown(mj, {"d", "mu", "mu_range", "vol", "vol_range", "correlation", "covariance", "phi", "shift",
                        "n_train", "n_val", "n_test", "recent_fraction"},
                   "market");
    read(mj, "d", m.d);
    const bool d_changed = mj.contains("d");
    if (mj.contains("mu")) m.mu_p = vector_or_scalar(mj.at("mu"), m.d);
    else if (mj.contains("mu_range")) {
      const auto r = mj.at("mu_range").get<std::array<double, 2>>();
      m.mu_p = linspace(r[0], r[1], m.d);
    } else if (d_changed) {
      m.mu_p = linspace(0.0005, 0.01, m.d);
    }
    if (mj.contains("covariance")) {
      const auto rows = mj.at("covariance").get<std::vector<std::vector<double>>>();
      m.sigma_p.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw std::invalid_argument("config: covariance must be square");
        for (std::size_t k = 0; k < rows.size(); ++k)
          m.sigma_p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
    } else if (mj.contains("vol") || mj.contains("vol_range") || mj.contains("correlation") || d_changed) {
      Vector vol = linspace(0.005, 0.3, m.d);
      if (mj.contains("vol")) vol = vector_or_scalar(mj.at("vol"), m.d);
      else if (mj.contains("vol_range")) {
        const auto r = mj.at("vol_range").get<std::array<double, 2>>();
        vol = linspace(r[0], r[1], m.d);
      }
      if (vol.size() != static_cast<Eigen::Index>(m.d)) throw std::invalid_argument("config: vol must have length d");
      m.sigma_p = equicorrelated_covariance(vol, mj.value("correlation", 0.3));
    }
    read(mj, "phi", m.phi_p);
    if (mj.contains("shift")) {
      const json& sj = mj.at("shift");
      if (sj.is_null()) {
        m.shift.reset();
      } else {
        reject_unknown(sj, {"delta_mu", "vol_multiplier", "phi"}, "market.shift");
        ShiftConfig s = m.shift.value_or(ShiftConfig{Vector::Constant(static_cast<Eigen::Index>(m.d), 0.003), 1.7, 0.45});
        if (sj.contains("delta_mu")) s.delta_mu = vector_or_scalar(sj.at("delta_mu"), m.d);
        read(sj, "vol_multiplier", s.vol_multiplier);
        read(sj, "phi", s.phi);
        m.shift = s;
      }
    } else if (d_changed && m.shift) {
      m.shift->delta_mu = Vector::Constant(static_cast<Eigen::Index>(m.d), m.shift->delta_mu[0]);
    }
    read(mj, "n_train", m.n_train);
    read(mj, "n_val", m.n_val);
    read(mj, "n_test", m.n_test);
    read(mj, "recent_fraction", m.recent_fraction);
  }

  if (j.contains("risk")) {
    const json& rj = j.at("risk");
    reject_unknown(rj, {"alpha", "beta", "gamma", "gamma_margin"}, "risk");
    read(rj, "alpha", m.alpha);
    read(rj, "beta", m.beta);
    if (rj.contains("gamma") && !rj.at("gamma").is_null()) c.gamma = rj.at("gamma").get<double>();
    read(rj, "gamma_margin", c.gamma_margin);
  }

  if (j.contains("ratio")) {
    const json& rj = j.at("ratio");
    reject_unknown(rj, {"lambda", "max_iterations", "gradient_tolerance", "clip", "quadratic_features",
                        "train_weight_blend"},
                   "ratio");
    read(rj, "lambda", c.ratio.lambda);
    read(rj, "max_iterations", c.ratio.max_iterations);
    read(rj, "gradient_tolerance", c.ratio.gradient_tolerance);
    if (rj.contains("clip")) {
      const auto r = rj.at("clip").get<std::array<double, 2>>();
      c.ratio.clip_lo = r[0];
      c.ratio.clip_hi = r[1];
    }
    read(rj, "quadratic_features", c.ratio.quadratic_features);
    read(rj, "train_weight_blend", c.train_weight_blend);
  }

  if (j.contains("validator")) {
    const json& vj = j.at("validator");
    reject_unknown(vj, {"bootstrap_draws", "block_length", "n_eff_min", "delta_min", "delta_max"}, "validator");
    read(vj, "bootstrap_draws", c.bootstrap_draws);
    if (vj.contains("block_length")) {
      const json& b = vj.at("block_length");
      if (b.is_string()) {
        if (b.get<std::string>() != "auto") throw std::invalid_argument("config: block_length must be \"auto\" or an integer");
        c.block_length = 0;
      } else {
        c.block_length = b.get<std::size_t>();
      }
    }
    read(vj, "n_eff_min", c.n_eff_min);
    read(vj, "delta_min", c.delta_min);
    read(vj, "delta_max", c.delta_max);
  }

  if (j.contains("candidates")) {
    const json& cj = j.at("candidates");
    reject_unknown(cj, {"delta_grid", "n_dirichlet"}, "candidates");
    if (cj.contains("delta_grid")) {
      const json& g = cj.at("delta_grid");
      if (g.is_array()) {
        c.delta_grid = g.get<std::vector<double>>();
      } else {
        reject_unknown(g, {"lo", "hi", "count"}, "candidates.delta_grid");
        c.delta_grid = log_spaced_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("count").get<std::size_t>());
      }
    }
    read(cj, "n_dirichlet", c.n_dirichlet);
  }

  if (j.contains("solver")) {
    const json& sj = j.at("solver");
    reject_unknown(sj, {"iterations", "eta0", "penalty_factor", "certify_tol"}, "solver");
    read(sj, "iterations", c.solver.iterations);
    read(sj, "eta0", c.solver.eta0);
    read(sj, "penalty_factor", c.solver.penalty_factor);
    read(sj, "certify_tol", c.solver.certify_tol);
  }

  if (j.contains("iw_cv")) {
    const json& ij = j.at("iw_cv");
    reject_unknown(ij, {"k_folds", "fallback"}, "iw_cv");
    read(ij, "k_folds", c.k_folds);
    read(ij, "fallback", c.iw_cv_fallback);
  }

  c.validate();
  return c;
}

json config_to_json(const BenchConfig& c) {
  const ScenarioConfig& m = c.market;
  json cov = json::array();
  for (Eigen::Index i = 0; i < m.sigma_p.rows(); ++i) cov.push_back(to_std(m.sigma_p.row(i).transpose()));
  json market = {{"d", m.d},
                 {"mu", to_std(m.mu_p)},
                 {"covariance", cov},
                 {"phi", m.phi_p},
                 {"n_train", m.n_train},
                 {"n_val", m.n_val},
                 {"n_test", m.n_test},
                 {"recent_fraction", m.recent_fraction}};
  if (m.shift)
    market["shift"] = {{"delta_mu", to_std(m.shift->delta_mu)},
                       {"vol_multiplier", m.shift->vol_multiplier},
                       {"phi", m.shift->phi}};
  else
    market["shift"] = nullptr;
  return {
      {"market", market},
      {"risk",
       {{"alpha", m.alpha},
        {"beta", m.beta},
        {"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
        {"gamma_margin", c.gamma_margin}}},
      {"ratio",
       {{"lambda", c.ratio.lambda},
        {"max_iterations", c.ratio.max_iterations},
        {"gradient_tolerance", c.ratio.gradient_tolerance},
        {"clip", {c.ratio.clip_lo, c.ratio.clip_hi}},
        {"quadratic_features", c.ratio.quadratic_features},
        {"train_weight_blend", c.train_weight_blend}}},
      {"validator",
       {{"bootstrap_draws", c.bootstrap_draws},
        {"block_length", c.block_length == 0 ? json("auto") : json(c.block_length)},
        {"n_eff_min", c.n_eff_min},
        {"delta_min", c.delta_min},
        {"delta_max", c.delta_max}}},
      {"candidates", {{"delta_grid", c.delta_grid}, {"n_dirichlet", c.n_dirichlet}}},
      {"solver",
       {{"iterations", c.solver.iterations},
        {"eta0", c.solver.eta0},
        {"penalty_factor", c.solver.penalty_factor},
        {"certify_tol", c.solver.certify_tol}}},
      {"iw_cv", {{"k_folds", c.k_folds}, {"fallback", c.iw_cv_fallback}}},
  };
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace gsv
