#include "fedint/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace fedint::kernels {

namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void add_u64_scalar(const std::uint64_t* x, std::uint64_t* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void sub_u64_scalar(const std::uint64_t* x, std::uint64_t* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] -= x[i];
}

constexpr KernelTable kScalar{"scalar", axpy_scalar, scale_scalar, dot_scalar, add_u64_scalar,
                              sub_u64_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

#if defined(FEDINT_HAVE_AVX2)
const KernelTable& avx2_kernels();  // kernels_avx2.cpp

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernels() : nullptr;
}
#else
const KernelTable* avx2_table() { return nullptr; }
#endif

const KernelTable& active() {
  static const KernelTable* table = [] {
    const char* force = std::getenv("FEDINT_KERNELS");
    if (force && std::strcmp(force, "scalar") == 0) return &kScalar;
    if (const KernelTable* t = avx2_table()) return t;
    return &kScalar;
  }();
  return *table;
}

}  // namespace fedint::kernels
