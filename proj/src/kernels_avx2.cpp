#include "gmem/kernels.hpp"

#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
#define GMEM_HAVE_AVX2_TARGET 1
#include <immintrin.h>
#else
#define GMEM_HAVE_AVX2_TARGET 0
#endif

#include <stdexcept>

namespace gmem::kernels::detail {

#if GMEM_HAVE_AVX2_TARGET

namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

bool avx2_compiled() { return true; }

__attribute__((target("avx2,fma"))) void squared_distances_avx2(const double* rows, std::size_t n,
                                                                std::size_t d, const double* x,
                                                                double* out) {
  const std::size_t dv = d & ~std::size_t{3};
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rows + r * d;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j < dv; j += 4) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double tail = 0.0;
    for (; j < d; ++j) {
      const double diff = row[j] - x[j];
      tail += diff * diff;
    }
    out[r] = hsum(acc) + tail;
  }
}

__attribute__((target("avx2,fma"))) void row_dots_avx2(const double* rows, std::size_t n,
                                                       std::size_t d, const double* x,
                                                       double* out) {
  const std::size_t dv = d & ~std::size_t{3};
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rows + r * d;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j < dv; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
    double tail = 0.0;
    for (; j < d; ++j) tail += row[j] * x[j];
    out[r] = hsum(acc) + tail;
  }
}

__attribute__((target("avx2,fma"))) void weighted_row_sum_avx2(const double* rows, std::size_t n,
                                                               std::size_t d, const double* w,
                                                               double* out) {
  const std::size_t dv = d & ~std::size_t{3};
  for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;

  std::size_t r = 0;
  for (; r + 1 < n; r += 2) {
    const double w0 = w[r];
    const double w1 = w[r + 1];
    if (w0 == 0.0 && w1 == 0.0) continue;
    const double* row0 = rows + r * d;
    const double* row1 = row0 + d;
    const __m256d vw0 = _mm256_set1_pd(w0);
    const __m256d vw1 = _mm256_set1_pd(w1);
    std::size_t j = 0;
    for (; j < dv; j += 4) {
      __m256d o = _mm256_loadu_pd(out + j);
      o = _mm256_fmadd_pd(vw0, _mm256_loadu_pd(row0 + j), o);
      o = _mm256_fmadd_pd(vw1, _mm256_loadu_pd(row1 + j), o);
      _mm256_storeu_pd(out + j, o);
    }
    for (; j < d; ++j) out[j] += w0 * row0[j] + w1 * row1[j];
  }
  if (r < n && w[r] != 0.0) {
    const double* row = rows + r * d;
    const __m256d vw = _mm256_set1_pd(w[r]);
    std::size_t j = 0;
    for (; j < dv; j += 4)
      _mm256_storeu_pd(out + j,
                       _mm256_fmadd_pd(vw, _mm256_loadu_pd(row + j), _mm256_loadu_pd(out + j)));
    for (; j < d; ++j) out[j] += w[r] * row[j];
  }
}

#else

bool avx2_compiled() { return false; }

void squared_distances_avx2(const double*, std::size_t, std::size_t, const double*, double*) {
  throw std::logic_error("AVX2 kernels not compiled for this target");
}
void row_dots_avx2(const double*, std::size_t, std::size_t, const double*, double*) {
  throw std::logic_error("AVX2 kernels not compiled for this target");
}
void weighted_row_sum_avx2(const double*, std::size_t, std::size_t, const double*, double*) {
  throw std::logic_error("AVX2 kernels not compiled for this target");
}

#endif

}  // namespace gmem::kernels::detail
