#include "gsv/core_risk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gsv/kernels.hpp"

namespace gsv {
namespace {

constexpr double kSimplexTol = 1e-9;
constexpr double kClampTol = 1e-12;
constexpr double kWeightSumTol = 1e-10;
// Cumulative tail mass within this distance of alpha counts as reaching it
// exactly, which moves the threshold to the next breakpoint down.
constexpr double kMassTol = 1e-12;

std::size_t to_size(Eigen::Index i) { return static_cast<std::size_t>(i); }

void check_normalized(std::span<const double> w, const char* what) {
  double total = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument(std::string(what) + ": weights must be finite and nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kWeightSumTol)
    throw std::invalid_argument(std::string(what) + ": weights must sum to one");
}

}  // namespace

std::string_view fold_name(Fold fold) {
  switch (fold) {
    case Fold::train: return "train";
    case Fold::validation: return "validation";
    case Fold::test: return "test";
  }
  return "unknown";
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

// ---------------------------------------------------------------- ReturnSeries

ReturnSeries::ReturnSeries(Matrix data, Fold origin) : data_(std::move(data)), origin_(origin) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw std::invalid_argument("ReturnSeries needs at least one period and one asset");
  if (!data_.allFinite()) throw std::invalid_argument("ReturnSeries entries must be finite");
}

ReturnSeries ReturnSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > periods() || count == 0)
    throw std::out_of_range("ReturnSeries::slice out of range");
  return ReturnSeries(data_.middleRows(static_cast<Eigen::Index>(first),
                                       static_cast<Eigen::Index>(count)),
                      origin_);
}

ReturnSeries ReturnSeries::concat(const ReturnSeries& later) const {
  if (later.assets() != assets()) throw std::invalid_argument("concat: asset count mismatch");
  Matrix out(data_.rows() + later.data_.rows(), data_.cols());
  out.topRows(data_.rows()) = data_;
  out.bottomRows(later.data_.rows()) = later.data_;
  return ReturnSeries(std::move(out), origin_);
}

ReturnSeries ReturnSeries::with_origin(Fold origin) const { return ReturnSeries(data_, origin); }

// ------------------------------------------------------------ PortfolioWeights

PortfolioWeights::PortfolioWeights(Vector x) : x_(std::move(x)) {
  if (x_.size() < 1) throw std::invalid_argument("PortfolioWeights: empty allocation");
  for (Eigen::Index i = 0; i < x_.size(); ++i) {
    if (!std::isfinite(x_[i])) throw std::invalid_argument("PortfolioWeights: non-finite entry");
    if (x_[i] < -kClampTol)
      throw std::invalid_argument("PortfolioWeights: negative allocation " + std::to_string(x_[i]));
    if (x_[i] < 0.0) x_[i] = 0.0;
  }
  if (std::abs(x_.sum() - 1.0) > kSimplexTol)
    throw std::invalid_argument("PortfolioWeights: allocations must sum to one");
  norm2_ = x_.norm();
}

PortfolioWeights PortfolioWeights::equal(std::size_t assets) {
  return PortfolioWeights(Vector::Constant(static_cast<Eigen::Index>(assets),
                                           1.0 / static_cast<double>(assets)));
}

// -------------------------------------------------------------- WeightedSample

WeightedSample::WeightedSample(ReturnSeries series, Vector w)
    : series_(std::move(series)), w_(std::move(w)) {
  if (to_size(w_.size()) != series_.periods())
    throw std::invalid_argument("WeightedSample: weight count does not match periods");
  n_eff_ = effective_sample_size(as_span(w_));
  n_eff_ = std::clamp(n_eff_, 1.0, static_cast<double>(series_.periods()));
}

WeightedSample WeightedSample::uniform(ReturnSeries series) {
  const auto n = static_cast<Eigen::Index>(series.periods());
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return WeightedSample(std::move(series), std::move(w));
}

WeightedSample WeightedSample::normalized(ReturnSeries series, const Vector& raw) {
  if ((raw.array() < 0.0).any() || !raw.allFinite())
    throw std::invalid_argument("WeightedSample: raw weights must be finite and nonnegative");
  const double total = raw.sum();
  if (!(total > 0.0)) throw std::invalid_argument("WeightedSample: all-zero weights");
  return WeightedSample(std::move(series), raw / total);
}

// ------------------------------------------------------------------ estimators

TailSplit ru_tail_split(std::span<const double> losses, std::span<const double> w,
                        double alpha, std::vector<std::size_t>& order) {
  const std::size_t n = losses.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto descending = [&losses](std::size_t a, std::size_t b) {
    return losses[a] > losses[b] || (losses[a] == losses[b] && a < b);
  };

  const double target = alpha + kMassTol;
  auto scan = [&](std::size_t limit, TailSplit& out) {
    double cum = 0.0;
    for (std::size_t p = 0; p < limit; ++p) {
      const double wi = w[order[p]];
      if (cum + wi > target) {
        out = {losses[order[p]], p, cum};
        return true;
      }
      cum += wi;
    }
    return false;
  };

  TailSplit split;
  // Most of the time the alpha-tail sits well inside the top few alpha*n
  // points: select a cutoff on a plain copy of the losses, sort only the rows
  // at or above it, and fall back to a full sort when that is not enough.
  const auto guess = static_cast<std::size_t>(std::ceil(2.0 * alpha * static_cast<double>(n))) + 32;
  if (guess < n) {
    thread_local std::vector<double> scratch;
    scratch.assign(losses.begin(), losses.end());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(guess - 1), scratch.end(),
                     std::greater<>());
    const double cutoff = scratch[guess - 1];
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (losses[i] >= cutoff) order[m++] = i;
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), descending);
    if (scan(m, split)) return split;
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::sort(order.begin(), order.end(), descending);
  if (scan(n, split)) return split;

  // Total mass never exceeded alpha (only possible with alpha ~ 1): the whole
  // support is the tail and the smallest positive-weight loss is the threshold.
  std::size_t last = n - 1;
  while (last > 0 && w[order[last]] <= 0.0) --last;
  double above = 0.0;
  for (std::size_t p = 0; p < last; ++p) above += w[order[p]];
  return {losses[order[last]], last, above};
}

void portfolio_losses(const Matrix& returns, const Vector& x, std::span<double> out) {
  const auto& k = kernels::active();
  k.gemv(returns.data(), to_size(returns.rows()), to_size(returns.cols()), x.data(), out.data());
  for (double& v : out) v = -v;
}

Vector portfolio_losses(const ReturnSeries& series, const PortfolioWeights& x) {
  if (series.assets() != x.size())
    throw std::invalid_argument("portfolio_losses: dimension mismatch");
  Vector out(static_cast<Eigen::Index>(series.periods()));
  portfolio_losses(series.data(), x.values(), {out.data(), series.periods()});
  return out;
}

CvarEstimate weighted_cvar(std::span<const double> losses, std::span<const double> w,
                           double alpha) {
  check_alpha(alpha);
  if (losses.size() != w.size() || losses.empty())
    throw std::invalid_argument("weighted_cvar: loss and weight lengths differ");
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) throw std::invalid_argument("weighted_cvar: all-zero weights");

  std::vector<std::size_t> order;
  const TailSplit split = ru_tail_split(losses, w, alpha, order);

  const auto& k = kernels::active();
  CvarEstimate est;
  est.t_w = split.threshold;
  est.scores.resize(static_cast<Eigen::Index>(losses.size()));
  k.cvar_scores(losses.data(), est.t_w, 1.0 / alpha, losses.size(), est.scores.data());
  est.h_w = k.dot(w.data(), est.scores.data(), w.size());
  est.sigma_w = std::sqrt(std::max(0.0, k.weighted_sq_dev(w.data(), est.scores.data(), est.h_w, w.size())));
  return est;
}

CvarEstimate weighted_cvar(const WeightedSample& sample, const PortfolioWeights& x,
                           double alpha) {
  check_alpha(alpha);
  if (sample.series().assets() != x.size())
    throw std::invalid_argument("weighted_cvar: dimension mismatch");
  const Vector losses = portfolio_losses(sample.series(), x);
  return weighted_cvar(as_span(losses), as_span(sample.weights()), alpha);
}

double empirical_cvar(std::span<const double> losses, double alpha) {
  const std::vector<double> w(losses.size(), 1.0 / static_cast<double>(losses.size()));
  return weighted_cvar(losses, w, alpha).h_w;
}

double effective_sample_size(std::span<const double> w) {
  if (w.empty()) throw std::invalid_argument("effective_sample_size: empty weights");
  check_normalized(w, "effective_sample_size");
  const double sq = kernels::active().dot(w.data(), w.data(), w.size());
  return 1.0 / sq;
}

double robust_lhs(double cvar_value, double delta, double alpha, double norm2) {
  if (!(delta >= 0.0)) throw std::invalid_argument("robust_lhs: delta must be nonnegative");
  check_alpha(alpha);
  return cvar_value + (delta / alpha) * norm2;
}

double robust_lhs(double cvar_value, double delta, double alpha, const PortfolioWeights& x) {
  return robust_lhs(cvar_value, delta, alpha, x.norm2());
}

}  // namespace gsv
