#include "spider/simd.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#define SPIDER_HAVE_NEON 1
#include <arm_neon.h>
#endif

namespace spider::simd::neon {

#ifdef SPIDER_HAVE_NEON
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void outer(const double* a, std::size_t na, const double* b, std::size_t nb, double* out) {
  for (std::size_t r = 0; r < na; ++r) {
    const float64x2_t ar = vdupq_n_f64(a[r]);
    double* row = out + r * nb;
    std::size_t j = 0;
    for (; j + 2 <= nb; j += 2) vst1q_f64(row + j, vmulq_f64(ar, vld1q_f64(b + j)));
    for (; j < nb; ++j) row[j] = a[r] * b[j];
  }
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{dot, sum_sq_diff, axpy, sub, outer};
  return &t;
}
#else
const KernelTable* table() { return nullptr; }
#endif

}  // namespace spider::simd::neon
