#pragma once

#include <span>

#include "gsv/core_risk.hpp"

namespace gsv {

/// In-place Euclidean projection onto {x >= 0, sum x = 1} (sort-and-threshold).
void project_to_simplex(std::span<double> v);

Vector project_to_simplex(const Vector& v);

}  // namespace gsv
