#include "gsv/shift_weights.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "gsv/kernels.hpp"

namespace gsv {
namespace {

constexpr std::size_t kMinWindow = 10;

double feature_value(const Matrix& data, Eigen::Index row, std::size_t column, std::size_t d) {
  if (column < d) return data(row, static_cast<Eigen::Index>(column));
  const double v = data(row, static_cast<Eigen::Index>(column - d));
  return v * v;
}

std::size_t feature_count(std::size_t d, bool quadratic) { return quadratic ? 2 * d : d; }

// Standardized design for the given rows, using the model's kept columns.
Matrix design(const RatioModel& model, const Matrix& data) {
  const auto p = static_cast<Eigen::Index>(model.columns.size());
  Matrix z(data.rows(), p);
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index k = 0; k < p; ++k)
      z(i, k) = (feature_value(data, i, model.columns[static_cast<std::size_t>(k)], model.assets) -
                 model.feature_mean[k]) /
                model.feature_scale[k];
  return z;
}

double log1p_exp(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

Vector RatioModel::scores(const ReturnSeries& series) const {
  if (series.assets() != assets) throw std::invalid_argument("RatioModel: asset count mismatch");
  const Matrix z = design(*this, series.data());
  Vector s(z.rows());
  if (z.cols() > 0)
    kernels::active().gemv(z.data(), static_cast<std::size_t>(z.rows()),
                           static_cast<std::size_t>(z.cols()), coefficients.data(), s.data());
  else
    s.setZero();
  s.array() += intercept;
  return s;
}

std::pair<ReturnSeries, ReturnSeries> split_early_late(const ReturnSeries& series,
                                                       double recent_fraction) {
  if (!(recent_fraction > 0.0 && recent_fraction < 1.0))
    throw std::invalid_argument("recent_fraction must lie in (0, 1)");
  const std::size_t n = series.periods();
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) * recent_fraction));
  if (m < kMinWindow || n - m < kMinWindow)
    throw std::invalid_argument("split_early_late: both windows need at least 10 rows (n = " +
                                std::to_string(n) + ", late = " + std::to_string(m) + ")");
  return {series.slice(0, n - m), series.slice(n - m, m)};
}

RatioModel fit_ratio_model(const ReturnSeries& early, const ReturnSeries& late,
                           const RatioModelConfig& config) {
  if (early.assets() != late.assets()) throw std::invalid_argument("fit_ratio_model: asset count mismatch");
  if (!(config.clip_lo > 0.0 && config.clip_hi >= config.clip_lo))
    throw std::invalid_argument("fit_ratio_model: need 0 < clip_lo <= clip_hi");
  if (config.lambda < 0.0) throw std::invalid_argument("fit_ratio_model: negative penalty");

  const std::size_t d = early.assets();
  const auto n0 = static_cast<Eigen::Index>(early.periods());
  const auto n1 = static_cast<Eigen::Index>(late.periods());
  const Eigen::Index n = n0 + n1;
  Matrix pooled(n, static_cast<Eigen::Index>(d));
  pooled.topRows(n0) = early.data();
  pooled.bottomRows(n1) = late.data();

  RatioModel model;
  model.assets = d;
  model.quadratic_features = config.quadratic_features;
  model.clip_lo = config.clip_lo;
  model.clip_hi = config.clip_hi;

  std::vector<double> means, scales;
  for (std::size_t col = 0; col < feature_count(d, config.quadratic_features); ++col) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean += feature_value(pooled, i, col, d);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dv = feature_value(pooled, i, col, d) - mean;
      var += dv * dv;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      spdlog::warn("ratio model: dropping zero-variance feature column {}", col);
      continue;
    }
    model.columns.push_back(col);
    means.push_back(mean);
    scales.push_back(sd);
  }
  model.feature_mean = Eigen::Map<const Vector>(means.data(), static_cast<Eigen::Index>(means.size()));
  model.feature_scale = Eigen::Map<const Vector>(scales.data(), static_cast<Eigen::Index>(scales.size()));

  const Matrix z = design(model, pooled);
  const auto p = z.cols();
  const auto rows = static_cast<std::size_t>(n);
  const auto cols = static_cast<std::size_t>(p);
  Vector y(n);
  y.head(n0).setZero();
  y.tail(n1).setOnes();

  // Step 1/L with L the Lipschitz constant of the penalized mean cross-entropy,
  // intercept column included.
  Matrix aug(n, p + 1);
  aug.leftCols(p) = z;
  aug.col(p).setOnes();
  const Matrix gram = (aug.transpose() * aug) / static_cast<double>(n);
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / (lmax / 4.0 + config.lambda);

  const auto& k = kernels::active();
  Vector beta = Vector::Zero(p);
  double b0 = 0.0;
  Vector s(n), resid(n), grad(p);
  auto evaluate = [&]() {
    if (p > 0) k.gemv(z.data(), rows, cols, beta.data(), s.data());
    else s.setZero();
    s.array() += b0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      resid[i] = sigmoid(s[i]) - y[i];
      loss += log1p_exp(s[i]) - y[i] * s[i];
    }
    loss = loss / static_cast<double>(n) + 0.5 * config.lambda * beta.squaredNorm();
    if (p > 0) k.gemv_t(z.data(), rows, cols, resid.data(), grad.data());
    grad = grad / static_cast<double>(n) + config.lambda * beta;
    return loss;
  };

  std::size_t it = 0;
  double loss = evaluate();
  double g0 = resid.mean();
  double gnorm = std::sqrt(grad.squaredNorm() + g0 * g0);
  while (it < config.max_iterations && gnorm >= config.gradient_tolerance) {
    beta -= step * grad;
    b0 -= step * g0;
    loss = evaluate();
    g0 = resid.mean();
    gnorm = std::sqrt(grad.squaredNorm() + g0 * g0);
    ++it;
  }
  if (!std::isfinite(loss) || !beta.allFinite() || !std::isfinite(b0))
    throw std::runtime_error("fit_ratio_model: non-finite training loss");

  model.coefficients = beta;
  model.intercept = b0;
  model.meta = {static_cast<std::size_t>(n1), static_cast<std::size_t>(n), it, loss, gnorm};
  return model;
}

Vector normalize_odds(std::span<const double> odds, double clip_lo, double clip_hi) {
  if (!(clip_lo > 0.0 && clip_hi >= clip_lo)) throw std::invalid_argument("odds clip: need 0 < lo <= hi");
  if (odds.empty()) throw std::invalid_argument("odds clip: empty input");
  Vector w(static_cast<Eigen::Index>(odds.size()));
  for (std::size_t i = 0; i < odds.size(); ++i) {
    if (std::isnan(odds[i])) throw std::invalid_argument("odds clip: NaN odds");
    w[static_cast<Eigen::Index>(i)] = std::clamp(odds[i], clip_lo, clip_hi);
  }
  return w / w.sum();
}

WeightedSample compute_weights(const RatioModel& model, const ReturnSeries& series) {
  Vector odds = model.scores(series).array().exp().matrix();
  return WeightedSample(series, normalize_odds(as_span(odds), model.clip_lo, model.clip_hi));
}

WeightedSample blended_training_weights(const RatioModel& model, const ReturnSeries& train,
                                        double blend) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw std::invalid_argument("train_weight_blend must lie in [0, 1]");
  const double n = static_cast<double>(train.periods());
  const WeightedSample ratio = compute_weights(model, train);
  Vector w = ((1.0 - blend) / n + blend * ratio.weights().array()).matrix();
  return WeightedSample(train, w / w.sum());
}

nlohmann::json ratio_model_to_json(const RatioModel& m) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {
      {"assets", m.assets},
      {"quadratic_features", m.quadratic_features},
      {"columns", m.columns},
      {"feature_mean", vec(m.feature_mean)},
      {"feature_scale", vec(m.feature_scale)},
      {"coefficients", vec(m.coefficients)},
      {"intercept", m.intercept},
      {"clip_lo", m.clip_lo},
      {"clip_hi", m.clip_hi},
      {"meta",
       {{"m", m.meta.m},
        {"n2", m.meta.n2},
        {"iterations", m.meta.iterations},
        {"final_loss", m.meta.final_loss},
        {"gradient_norm", m.meta.gradient_norm}}},
  };
}

RatioModel ratio_model_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  RatioModel m;
  m.assets = j.at("assets").get<std::size_t>();
  m.quadratic_features = j.at("quadratic_features").get<bool>();
  m.columns = j.at("columns").get<std::vector<std::size_t>>();
  m.feature_mean = vec(j.at("feature_mean"));
  m.feature_scale = vec(j.at("feature_scale"));
  m.coefficients = vec(j.at("coefficients"));
  m.intercept = j.at("intercept").get<double>();
  m.clip_lo = j.at("clip_lo").get<double>();
  m.clip_hi = j.at("clip_hi").get<double>();
  const auto& meta = j.at("meta");
  m.meta = {meta.at("m").get<std::size_t>(), meta.at("n2").get<std::size_t>(),
            meta.at("iterations").get<std::size_t>(), meta.at("final_loss").get<double>(),
            meta.at("gradient_norm").get<double>()};
  const auto p = m.columns.size();
  if (static_cast<std::size_t>(m.coefficients.size()) != p ||
      static_cast<std::size_t>(m.feature_mean.size()) != p ||
      static_cast<std::size_t>(m.feature_scale.size()) != p)
    throw std::invalid_argument("ratio model record: inconsistent vector lengths");
  if (!(m.clip_lo > 0.0 && m.clip_hi >= m.clip_lo))
    throw std::invalid_argument("ratio model record: invalid clip bounds");
  if (!m.coefficients.allFinite() || !std::isfinite(m.intercept))
    throw std::invalid_argument("ratio model record: non-finite coefficients");
  return m;
}

}  // namespace gsv
