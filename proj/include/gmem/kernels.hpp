#pragma once

// Data-parallel inner loops of the empirical score: distances, dot products
// and weighted sums over an N x d pattern matrix. Each kernel has a scalar
// reference implementation and an AVX2/FMA variant; the variant is chosen
// once at runtime from CPU features (override with GMEM_ISA=scalar|avx2).
//
// Variants agree to rounding, not bit-for-bit (FMA and lane-wise summation
// reorder operations). Runs are reproducible for a fixed ISA, which is why
// the active ISA is written into every run manifest.

#include "gmem/types.hpp"

#include <cstddef>
#include <string_view>

namespace gmem::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  /// out[r] = |rows[r] - x|^2
  void (*squared_distances)(const double* rows, std::size_t n, std::size_t d, const double* x,
                            double* out);
  /// out[r] = rows[r] . x
  void (*row_dots)(const double* rows, std::size_t n, std::size_t d, const double* x, double* out);
  /// out[j] = sum_r w[r] * rows[r][j]   (out is overwritten)
  void (*weighted_row_sum)(const double* rows, std::size_t n, std::size_t d, const double* w,
                           double* out);
};

bool supported(Isa isa);
Isa best_available();

/// Table for a specific ISA. Throws std::invalid_argument if the CPU lacks it.
const KernelTable& table(Isa isa);

/// Currently selected table (initialised lazily from GMEM_ISA or CPU features).
const KernelTable& active();
void select(Isa isa);

Isa parse_isa(std::string_view name);
std::string_view isa_name(Isa isa);

// Eigen-facing conveniences over the active table.
Vector squared_distances(const RowMatrix& rows, const Vector& x);
Vector row_dots(const RowMatrix& rows, const Vector& x);
Vector weighted_row_sum(const RowMatrix& rows, const Vector& w);

namespace detail {
// Defined in kernels_avx2.cpp; only callable when supported(Isa::avx2).
void squared_distances_avx2(const double*, std::size_t, std::size_t, const double*, double*);
void row_dots_avx2(const double*, std::size_t, std::size_t, const double*, double*);
void weighted_row_sum_avx2(const double*, std::size_t, std::size_t, const double*, double*);
bool avx2_compiled();
}  // namespace detail

}  // namespace gmem::kernels
