#pragma once

// Data-parallel inner loops used by the risk, ratio-model, solver and bootstrap
// code. Every kernel has a scalar reference implementation; an AVX2/FMA variant
// is compiled separately and picked at runtime when the CPU supports it.
//
// Matrices are dense row-major: element (i, j) of an rows x cols matrix lives
// at a[i * cols + j].

#include <cstddef>
#include <string_view>

namespace gsv::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  Backend backend;

  // out[i] = sum_j a[i, j] * x[j]
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* out);

  // out[j] = sum_i coef[i] * a[i, j]
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols,
                 const double* coef, double* out);

  double (*dot)(const double* a, const double* b, std::size_t n);

  // sum_i w[i] * (v[i] - center)^2
  double (*weighted_sq_dev)(const double* w, const double* v, double center,
                            std::size_t n);

  // sum_i w[i] * max(v[i] - t, 0)
  double (*weighted_excess)(const double* w, const double* v, double t,
                            std::size_t n);

  // out[i] = t + inv_alpha * max(v[i] - t, 0)
  void (*cvar_scores)(const double* v, double t, double inv_alpha,
                      std::size_t n, double* out);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

// Best backend available on this machine.
Backend default_backend();

// Table used by the library. Resolved on first use to default_backend().
const KernelTable& active();

// Overrides the active backend. Not meant to be called while other threads
// are running library code. Throws std::invalid_argument if the backend is not
// available.
void set_backend(Backend backend);

bool backend_available(Backend backend);

std::string_view backend_name(Backend backend);

}  // namespace gsv::kernels
