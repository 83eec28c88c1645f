#pragma once

// Data-parallel reductions used by the tensor and kernel inner loops.
//
// Every routine has a portable scalar reference implementation plus
// vectorized variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is
// picked once at startup from the CPU feature bits; STM_SIMD=scalar|avx2|neon
// in the environment overrides the choice. Variants are not bitwise identical
// to the reference (different summation order) but are deterministic for a
// given ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace stm::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
};

bool supported(Isa isa) noexcept;

/// Function table for a specific ISA; throws stm::Error if the CPU lacks it.
const KernelTable& table(Isa isa);

/// ISA selected for this process.
Isa active_isa() noexcept;
const KernelTable& active() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}

namespace detail {
// Per-ISA tables, defined in their own translation units.
const KernelTable& scalar_table() noexcept;
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(__aarch64__)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace stm::simd
