#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pqlwcr/kernels.hpp"

using namespace pqlwcr;

namespace {

struct Buffers {
  std::vector<double> w, a, b;
};

Buffers random_buffers(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> positive(0.0, 2.0);
  Buffers buf{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    buf.w[i] = positive(rng);
    buf.a[i] = normal(rng);
    buf.b[i] = normal(rng);
  }
  return buf;
}

// Reductions differ only in summation order, so the bound scales with the sum
// of absolute terms.
void check_close(double x, double y, double magnitude) {
  CHECK(std::abs(x - y) <= 1e-13 * (1.0 + magnitude));
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto& k = kernels::scalar_table();
  const std::vector<double> w{1, 2, 3}, a{1, -1, 2}, b{4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(4 - 5 + 12));
  CHECK(k.wdot(w.data(), a.data(), b.data(), 3) == doctest::Approx(4 - 10 + 36));
  CHECK(k.wsumsq(w.data(), a.data(), 3) == doctest::Approx(1 + 2 + 12));
  std::vector<double> y{1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, -1, 5});
  CHECK(k.dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("active table is one of the built variants") {
  const auto& active = kernels::active();
  const bool known = &active == &kernels::scalar_table() || &active == kernels::avx2_table();
  CHECK(known);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const kernels::KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 variant unavailable on this machine; skipping");
    return;
  }
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n <= 67; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      Buffers buf = random_buffers(n, rng);
      double mag_dot = 0.0, mag_wdot = 0.0, mag_ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mag_dot += std::abs(buf.a[i] * buf.b[i]);
        mag_wdot += std::abs(buf.w[i] * buf.a[i] * buf.b[i]);
        mag_ss += buf.w[i] * buf.a[i] * buf.a[i];
      }
      check_close(simd->dot(buf.a.data(), buf.b.data(), n),
                  ref.dot(buf.a.data(), buf.b.data(), n), mag_dot);
      check_close(simd->wdot(buf.w.data(), buf.a.data(), buf.b.data(), n),
                  ref.wdot(buf.w.data(), buf.a.data(), buf.b.data(), n), mag_wdot);
      check_close(simd->wsumsq(buf.w.data(), buf.a.data(), n),
                  ref.wsumsq(buf.w.data(), buf.a.data(), n), mag_ss);

      std::vector<double> y1 = buf.b, y2 = buf.b;
      ref.axpy(-0.37, buf.a.data(), y1.data(), n);
      simd->axpy(-0.37, buf.a.data(), y2.data(), n);
      CHECK(y1 == y2);
    }
  }
}

TEST_CASE("avx2 kernels handle unaligned offsets") {
  const kernels::KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) return;
  std::mt19937_64 rng(11);
  Buffers buf = random_buffers(100, rng);
  for (std::size_t off = 1; off < 4; ++off) {
    const std::size_t n = 100 - off;
    double mag = 0.0;
    for (std::size_t i = off; i < 100; ++i) mag += std::abs(buf.a[i] * buf.b[i]);
    check_close(simd->dot(buf.a.data() + off, buf.b.data() + off, n),
                kernels::scalar_table().dot(buf.a.data() + off, buf.b.data() + off, n), mag);
  }
}
