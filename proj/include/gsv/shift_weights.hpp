#pragma once

// Density-ratio weights from an early-vs-late logistic classifier.
//
// The classifier sees [xi, xi^2] per row (quadratic features, so that pure
// variance shifts are detectable), standardized with pooled statistics.
// Weights are the clipped odds of the "late" label, normalized to sum to one.

#include <cstddef>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <utility>
#include <vector>

#include "gsv/core_risk.hpp"

namespace gsv {

struct RatioModelConfig {
  double lambda = 1.0;  // L2 penalty on the slope coefficients (not the intercept)
  std::size_t max_iterations = 10000;
  double gradient_tolerance = 1e-8;
  double clip_lo = 0.1;
  double clip_hi = 10.0;
  bool quadratic_features = true;
};

struct RatioTrainingMeta {
  std::size_t m = 0;   // late-window length
  std::size_t n2 = 0;  // early + late
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  bool operator==(const RatioTrainingMeta&) const = default;
};

/// Fitted classifier. `columns` lists the feature columns that survived the
/// zero-variance filter (indices into [xi_1..xi_d, xi_1^2..xi_d^2]);
/// coefficients, means and scales are aligned with it.
struct RatioModel {
  std::size_t assets = 0;
  bool quadratic_features = true;
  std::vector<std::size_t> columns;
  Vector feature_mean;
  Vector feature_scale;
  Vector coefficients;
  double intercept = 0.0;
  double clip_lo = 0.1;
  double clip_hi = 10.0;
  RatioTrainingMeta meta;

  /// Linear score (log-odds of "late") for every row.
  Vector scores(const ReturnSeries& series) const;

  bool operator==(const RatioModel&) const = default;
};

/// late = last round(n * recent_fraction) rows, early = the rest.
std::pair<ReturnSeries, ReturnSeries> split_early_late(const ReturnSeries& series,
                                                       double recent_fraction);

RatioModel fit_ratio_model(const ReturnSeries& early, const ReturnSeries& late,
                           const RatioModelConfig& config = {});

/// Clip then normalize. Throws if the bounds are invalid.
Vector normalize_odds(std::span<const double> odds, double clip_lo, double clip_hi);

WeightedSample compute_weights(const RatioModel& model, const ReturnSeries& series);

/// (1 - blend) * uniform + blend * compute_weights(model, train).
WeightedSample blended_training_weights(const RatioModel& model, const ReturnSeries& train,
                                        double blend);

nlohmann::json ratio_model_to_json(const RatioModel& model);
RatioModel ratio_model_from_json(const nlohmann::json& j);

}  // namespace gsv
