#include "gsv/dro_solver.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "gsv/kernels.hpp"
#include "gsv/rng.hpp"
#include "gsv/simplex.hpp"

namespace gsv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Evaluates g(x) = weighted_cvar + (delta/alpha)||x|| - gamma and, on demand,
// one subgradient of it. Scratch buffers are reused across calls.
class RobustConstraint {
 public:
  RobustConstraint(const WeightedSample& sample, double delta, double alpha, double gamma)
      : x_data_(sample.series().data()),
        w_(sample.weights()),
        delta_(delta),
        alpha_(alpha),
        gamma_(gamma),
        n_(sample.size()),
        d_(sample.series().assets()),
        losses_(n_) {}

  double value(const Vector& x) {
    const auto& k = kernels::active();
    portfolio_losses(x_data_, x, losses_);
    split_ = ru_tail_split(losses_, as_span(w_), alpha_, order_);
    const double excess = k.weighted_excess(w_.data(), losses_.data(), split_.threshold, n_);
    cvar_ = split_.threshold + excess / alpha_;
    norm_ = x.norm();
    return cvar_ + (delta_ / alpha_) * norm_ - gamma_;
  }

  // Subgradient at the point passed to the last value() call.
  void subgradient(const Vector& x, Vector& out) {
    out.setZero(static_cast<Eigen::Index>(d_));
    auto add_row = [&](std::size_t i, double coef) {
      out -= coef * x_data_.row(static_cast<Eigen::Index>(i)).transpose();
    };
    for (std::size_t p = 0; p < split_.pivot; ++p)
      add_row(order_[p], w_[static_cast<Eigen::Index>(order_[p])] / alpha_);
    add_row(order_[split_.pivot], (alpha_ - split_.mass_above) / alpha_);
    if (norm_ > 0.0) out += (delta_ / alpha_ / norm_) * x;
  }

  double cvar() const { return cvar_; }
  double threshold() const { return split_.threshold; }
  const std::vector<double>& losses() const { return losses_; }

 private:
  const Matrix& x_data_;
  const Vector& w_;
  double delta_, alpha_, gamma_;
  std::size_t n_, d_;
  std::vector<double> losses_;
  std::vector<std::size_t> order_;
  TailSplit split_;
  double cvar_ = 0.0;
  double norm_ = 0.0;
};

void projected_step(Vector& x, const Vector& dir, double eta) {
  const double nd = dir.norm();
  if (!(nd > 0.0)) return;
  x -= (eta / nd) * dir;
  project_to_simplex(std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
}

struct Search {
  Vector best;
  double best_objective = kInf;
  double min_g = kInf;
  Vector argmin_g;
};

// Exact-penalty projected subgradient on c.x + rho * max(g, 0). With
// `phase_one` the linear term is dropped and g itself is minimized.
void subgradient_search(RobustConstraint& g, const Vector& c, double rho, Vector x,
                        const SolverConfig& cfg, bool phase_one, Search& s) {
  Vector sub;
  for (std::size_t k = 1; k <= cfg.iterations + 1; ++k) {
    const double gv = g.value(x);
    if (gv < s.min_g) {
      s.min_g = gv;
      s.argmin_g = x;
    }
    if (gv <= 0.0) {
      const double obj = c.dot(x);
      if (obj < s.best_objective) {
        s.best_objective = obj;
        s.best = x;
      }
      if (phase_one) return;
    }
    if (k > cfg.iterations) break;
    Vector dir;
    if (phase_one) {
      g.subgradient(x, dir);
    } else {
      dir = c;
      if (gv > 0.0) {
        g.subgradient(x, sub);
        dir += rho * sub;
      }
    }
    projected_step(x, dir, cfg.eta0 / std::sqrt(static_cast<double>(k)));
  }
}

}  // namespace

std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

Vector training_cost_vector(const WeightedSample& sample) {
  const Matrix& x = sample.series().data();
  Vector c(x.cols());
  kernels::active().gemv_t(x.data(), static_cast<std::size_t>(x.rows()),
                           static_cast<std::size_t>(x.cols()), sample.weights().data(), c.data());
  return -c;
}

double z_constraint_violation(const WeightedSample& sample, double delta, double alpha,
                              double gamma, const Vector& x, double v, double r, const Vector& z) {
  const Matrix& xi = sample.series().data();
  const Vector& w = sample.weights();
  if (x.size() != xi.cols() || z.size() != xi.rows())
    throw std::invalid_argument("z_constraint_violation: dimension mismatch");
  double worst = 0.0;
  auto note = [&worst](double violation) { worst = std::max(worst, violation); };
  note(delta * v + w.dot(z) - alpha * r);
  const Vector ret = xi * x;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    note(r - z[i] - gamma - ret[i]);
    note(-z[i]);
  }
  note(x.norm() - v);
  note(-v);
  note(-r);
  note(std::abs(x.sum() - 1.0));
  note(-x.minCoeff());
  return worst;
}

ReformulationSolution solve_reformulation(const WeightedSample& sample, double delta,
                                          double alpha, double gamma, const Vector& c,
                                          const SolverConfig& config) {
  if (!(delta >= 0.0)) throw std::invalid_argument("solve_reformulation: delta must be nonnegative");
  check_alpha(alpha);
  const auto d = static_cast<Eigen::Index>(sample.series().assets());
  if (c.size() != d) throw std::invalid_argument("solve_reformulation: cost vector dimension mismatch");

  RobustConstraint g(sample, delta, alpha, gamma);
  ReformulationSolution sol;

  Eigen::Index best_vertex = 0;
  c.minCoeff(&best_vertex);
  const Vector vertex = Vector::Unit(d, best_vertex);

  Search s;
  if (g.value(vertex) <= 0.0) {
    // The unconstrained minimizer of a linear objective over the simplex is
    // feasible, so it is optimal.
    s.best = vertex;
    s.best_objective = c.dot(vertex);
  } else {
    const double rho = config.penalty_factor * std::max(c.norm(), 1e-12);
    const Vector start = Vector::Constant(d, 1.0 / static_cast<double>(d));
    subgradient_search(g, c, rho, start, config, false, s);
    sol.iterations = config.iterations;
    if (s.best.size() == 0) {
      Search p1;
      subgradient_search(g, c, rho, s.argmin_g, config, true, p1);
      sol.iterations += config.iterations;
      if (p1.best.size() == 0) {
        sol.status = p1.min_g > 0.0 ? SolveStatus::infeasible : SolveStatus::max_iter;
        sol.x = p1.argmin_g;
        sol.objective = c.dot(sol.x);
        sol.robust_lhs = g.value(sol.x) + gamma;
        return sol;
      }
      subgradient_search(g, c, rho, p1.best, config, false, s);
      sol.iterations += config.iterations;
    }
    // Walk from the best feasible iterate toward the cost-minimizing vertex as
    // far as the constraint allows; the objective is linear along the segment.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vector y = (1.0 - mid) * s.best + mid * vertex;
      (g.value(y) <= 0.0 ? lo : hi) = mid;
    }
    if (lo > 0.0) {
      const Vector y = (1.0 - lo) * s.best + lo * vertex;
      if (c.dot(y) < s.best_objective && g.value(y) <= 0.0) {
        s.best = y;
        s.best_objective = c.dot(y);
      }
    }
  }

  sol.x = s.best;
  g.value(sol.x);
  const double t = g.threshold();
  sol.v = sol.x.norm();
  sol.r = gamma - t;
  sol.z.resize(static_cast<Eigen::Index>(sample.size()));
  for (std::size_t i = 0; i < sample.size(); ++i)
    sol.z[static_cast<Eigen::Index>(i)] = std::max(g.losses()[i] - t, 0.0);
  sol.objective = c.dot(sol.x);
  sol.robust_lhs = g.cvar() + (delta / alpha) * sol.v;
  sol.max_violation = z_constraint_violation(sample, delta, alpha, gamma, sol.x, sol.v, sol.r, sol.z);
  sol.status = sol.max_violation <= config.certify_tol ? SolveStatus::optimal : SolveStatus::max_iter;
  return sol;
}

Candidate make_candidate(const Vector& x, const Vector& c, Provenance provenance, double delta,
                         std::size_t index) {
  PortfolioWeights p(x);
  const double obj = c.dot(p.values());
  const double nrm = p.norm2();
  return Candidate{std::move(p), provenance, delta, index, obj, nrm};
}

ReformulationSolution solve_grid_point(const WeightedSample& train, const Vector& c, double delta,
                                       const CandidateMenuConfig& config) {
  return solve_reformulation(train, delta, config.alpha, config.gamma, c, config.solver);
}

std::vector<Candidate> generate_candidates(const WeightedSample& train,
                                           const CandidateMenuConfig& config,
                                           std::uint64_t seed) {
  for (std::size_t i = 0; i < config.delta_grid.size(); ++i) {
    if (!(config.delta_grid[i] >= 0.0)) throw std::invalid_argument("delta grid entries must be nonnegative");
    if (i > 0 && config.delta_grid[i] < config.delta_grid[i - 1])
      throw std::invalid_argument("delta grid must be sorted ascending");
  }
  const Vector c = training_cost_vector(train);
  const std::size_t d = train.series().assets();

  std::vector<Candidate> menu;
  auto add = [&menu](Candidate cand) {
    for (const Candidate& prev : menu)
      if ((prev.x.values() - cand.x.values()).cwiseAbs().maxCoeff() < 1e-6) return;
    menu.push_back(std::move(cand));
  };

  for (double delta : config.delta_grid) {
    const ReformulationSolution sol = solve_grid_point(train, c, delta, config);
    if (sol.status != SolveStatus::optimal) {
      spdlog::warn("radius {:.6g}: no certified solution ({}), skipped", delta, status_name(sol.status));
      continue;
    }
    add(make_candidate(sol.x, c, Provenance::grid, delta, 0));
  }

  Rng rng = make_rng(seed);
  std::gamma_distribution<double> gamma1(1.0, 1.0);
  for (std::size_t j = 0; j < config.n_dirichlet; ++j) {
    Vector x(static_cast<Eigen::Index>(d));
    for (Eigen::Index l = 0; l < x.size(); ++l) x[l] = gamma1(rng);
    x /= x.sum();
    add(make_candidate(x, c, Provenance::dirichlet, 0.0, j));
  }

  if (menu.empty()) throw std::runtime_error("candidate menu is empty");
  return menu;
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0) throw std::invalid_argument("log_spaced_grid: need 0 < lo <= hi, count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

void write_candidate_menu_csv(std::ostream& out, const std::vector<Candidate>& menu) {
  if (menu.empty()) return;
  out << "id,provenance,delta,index,objective,norm2";
  for (std::size_t l = 0; l < menu.front().x.size(); ++l) out << ",x_" << (l + 1);
  out << '\n';
  for (std::size_t j = 0; j < menu.size(); ++j) {
    const Candidate& c = menu[j];
    out << fmt::format("{},{},{:.17g},{},{:.17g},{:.17g}", j,
                       c.provenance == Provenance::grid ? "grid" : "dirichlet", c.delta, c.index,
                       c.objective, c.norm2);
    for (std::size_t l = 0; l < c.x.size(); ++l) out << fmt::format(",{:.17g}", c.x[l]);
    out << '\n';
  }
}

}  // namespace gsv
