#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace fedint::kernels {

/// Dense inner-loop primitives behind aggregation, SGD and secure summation.
/// Every variant is elementwise-identical to the scalar reference except
/// `dot`, whose summation order differs (relative error ~1e-15).
struct KernelTable {
  std::string_view name;
  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y *= a
  void (*scale)(double a, double* y, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += x (mod 2^64)
  void (*add_u64)(const std::uint64_t* x, std::uint64_t* y, std::size_t n);
  /// y -= x (mod 2^64)
  void (*sub_u64)(const std::uint64_t* x, std::uint64_t* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Best table for this CPU. FEDINT_KERNELS=scalar in the environment forces
/// the reference path.
const KernelTable& active();

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void scale(double a, std::span<double> y) { active().scale(a, y.data(), y.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void add_u64(std::span<const std::uint64_t> x, std::span<std::uint64_t> y) {
  active().add_u64(x.data(), y.data(), y.size());
}
inline void sub_u64(std::span<const std::uint64_t> x, std::span<std::uint64_t> y) {
  active().sub_u64(x.data(), y.data(), y.size());
}

}  // namespace fedint::kernels
