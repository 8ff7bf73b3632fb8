#include "spider/simd.hpp"

namespace spider::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void outer(const double* a, std::size_t na, const double* b, std::size_t nb, double* out) {
  for (std::size_t i = 0; i < na; ++i) {
    const double ai = a[i];
    double* row = out + i * nb;
    for (std::size_t j = 0; j < nb; ++j) row[j] = ai * b[j];
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{dot, sum_sq_diff, axpy, sub, outer};
  return t;
}

}  // namespace spider::simd::scalar
