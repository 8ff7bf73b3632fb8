#pragma once

// Dense double-precision kernels used by the forward map, the sensitivity
// Jacobian and the Gauss-Newton normal equations.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2+FMA
// on x86-64, NEON on AArch64) are selected at runtime from the CPU features;
// set_isa() pins a specific variant. All variants agree with the reference up
// to floating-point reassociation, which the equivalence tests bound.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spider::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*outer)(const double* a, std::size_t na, const double* b, std::size_t nb, double* out);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
// nullptr when the library was built without AVX2 support.
const KernelTable* table();
}
namespace neon {
const KernelTable* table();
}

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);  // "scalar" | "avx2" | "neon"; throws on others
bool isa_supported(Isa isa);
Isa detected_isa();
Isa active_isa();
// Throws std::invalid_argument if the ISA is not available on this CPU/build.
void set_isa(Isa isa);
std::vector<Isa> available_isas();

const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return kernels().sum_sq_diff(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  kernels().sub(a.data(), b.data(), out.data(), a.size());
}

// out is row-major a.size() x b.size(): out[i * nb + j] = a[i] * b[j].
inline void outer(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  kernels().outer(a.data(), a.size(), b.data(), b.size(), out.data());
}

}  // namespace spider::simd
