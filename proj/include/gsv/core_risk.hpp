#pragma once

// Weighted CVaR in Rockafellar-Uryasev form, the score vectors derived from
// it, effective sample size and the Wasserstein-robust left-hand side.
//
// Losses are always l_i = -xi_i . x (negative portfolio return).

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gsv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Denominator floor for score standard deviations.
inline constexpr double kSigmaFloor = 1e-12;

inline double floored_sigma(double sigma) { return sigma > kSigmaFloor ? sigma : kSigmaFloor; }

enum class Fold { train, validation, test };

std::string_view fold_name(Fold fold);

/// Time-ordered block of asset returns: rows are periods, columns assets.
/// Entries are finite; no operation reorders rows.
class ReturnSeries {
 public:
  ReturnSeries(Matrix data, Fold origin);

  const Matrix& data() const { return data_; }
  std::size_t periods() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t assets() const { return static_cast<std::size_t>(data_.cols()); }
  Fold origin() const { return origin_; }

  /// Rows [first, first + count), time order preserved.
  ReturnSeries slice(std::size_t first, std::size_t count) const;

  /// Rows of `this` followed by rows of `later`.
  ReturnSeries concat(const ReturnSeries& later) const;

  ReturnSeries with_origin(Fold origin) const;

 private:
  Matrix data_;
  Fold origin_;
};

/// Long-only fully invested allocation. Entries down to -1e-12 are clamped to
/// zero; anything more negative, or a sum off by more than 1e-9, throws.
class PortfolioWeights {
 public:
  explicit PortfolioWeights(Vector x);

  static PortfolioWeights equal(std::size_t assets);

  const Vector& values() const { return x_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.size()); }
  double norm2() const { return norm2_; }
  double operator[](std::size_t i) const { return x_[static_cast<Eigen::Index>(i)]; }

 private:
  Vector x_;
  double norm2_;
};

/// A return series with probability weights attached.
class WeightedSample {
 public:
  /// `w` must be nonnegative and sum to one within 1e-10.
  WeightedSample(ReturnSeries series, Vector w);

  static WeightedSample uniform(ReturnSeries series);

  /// Normalizes nonnegative raw weights (not all zero).
  static WeightedSample normalized(ReturnSeries series, const Vector& raw);

  const ReturnSeries& series() const { return series_; }
  const Vector& weights() const { return w_; }
  double n_eff() const { return n_eff_; }
  std::size_t size() const { return series_.periods(); }

 private:
  ReturnSeries series_;
  Vector w_;
  double n_eff_;
};

struct CvarEstimate {
  double t_w = 0.0;      // smallest minimizing threshold
  double h_w = 0.0;      // weighted CVaR, sum_i w_i phi_i
  double sigma_w = 0.0;  // sqrt(sum_i w_i (phi_i - h_w)^2), not floored
  Vector scores;         // phi_i = t_w + (l_i - t_w)_+ / alpha
};

/// Position of the VaR breakpoint inside a descending loss order.
struct TailSplit {
  double threshold = 0.0;       // t_w
  std::size_t pivot = 0;        // index into `order` of the breakpoint point
  double mass_above = 0.0;      // weight of order[0 .. pivot)
};

/// Finds the smallest minimizer of t -> t + (1/alpha) sum_i w_i (l_i - t)_+.
/// `order` is scratch space; on return its prefix [0, pivot] holds the
/// indices of the largest losses in descending order (ties by index).
TailSplit ru_tail_split(std::span<const double> losses, std::span<const double> w,
                        double alpha, std::vector<std::size_t>& order);

/// l = -X x
Vector portfolio_losses(const ReturnSeries& series, const PortfolioWeights& x);
void portfolio_losses(const Matrix& returns, const Vector& x, std::span<double> out);

CvarEstimate weighted_cvar(std::span<const double> losses, std::span<const double> w,
                           double alpha);

CvarEstimate weighted_cvar(const WeightedSample& sample, const PortfolioWeights& x,
                           double alpha);

/// Plain empirical CVaR with equal weights.
double empirical_cvar(std::span<const double> losses, double alpha);

/// 1 / sum_i w_i^2. Throws on negative or unnormalized weights.
double effective_sample_size(std::span<const double> w);

/// cvar + (delta / alpha) * ||x||_2
double robust_lhs(double cvar_value, double delta, double alpha, const PortfolioWeights& x);
double robust_lhs(double cvar_value, double delta, double alpha, double norm2);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_alpha(double alpha);

}  // namespace gsv
