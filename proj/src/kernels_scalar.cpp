#include "gsv/kernels.hpp"

#include <algorithm>

namespace gsv::kernels {
namespace {

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* coef, double* out) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double c = coef[i];
    if (c == 0.0) continue;
    const double* row = a + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += c * row[j];
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double weighted_sq_dev_scalar(const double* w, const double* v, double center,
                              std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dv = v[i] - center;
    acc += w[i] * dv * dv;
  }
  return acc;
}

double weighted_excess_scalar(const double* w, const double* v, double t,
                              std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::max(v[i] - t, 0.0);
  return acc;
}

void cvar_scores_scalar(const double* v, double t, double inv_alpha,
                        std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = t + inv_alpha * std::max(v[i] - t, 0.0);
}

constexpr KernelTable kScalar{
    Backend::scalar,        gemv_scalar,           gemv_t_scalar,
    dot_scalar,             weighted_sq_dev_scalar, weighted_excess_scalar,
    cvar_scores_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace gsv::kernels
