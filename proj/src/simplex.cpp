#include "gsv/simplex.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

namespace gsv {

void project_to_simplex(std::span<double> v) {
  if (v.empty()) throw std::invalid_argument("project_to_simplex: empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

Vector project_to_simplex(const Vector& v) {
  Vector out = v;
  project_to_simplex(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

}  // namespace gsv
