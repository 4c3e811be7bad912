#pragma once

// Dense double-precision kernels used by the coordinate-descent solver and the
// quasi-likelihood evaluators. A scalar reference table is always available;
// an AVX2/FMA table is compiled on x86-64 and picked at first use when the CPU
// supports it. Set PQLWCR_KERNELS=scalar to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace pqlwcr::kernels {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * a[i] * b[i]
  double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
  // sum_i w[i] * a[i]^2
  double (*wsumsq)(const double* w, const double* a, std::size_t n);
  // y[i] += alpha * x[i]; bitwise identical across tables (no fused multiply-add)
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant was not built or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// Table chosen once per process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double wdot(std::span<const double> w, std::span<const double> a,
                   std::span<const double> b) {
  return active().wdot(w.data(), a.data(), b.data(), a.size());
}

inline double wsumsq(std::span<const double> w, std::span<const double> a) {
  return active().wsumsq(w.data(), a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace pqlwcr::kernels
