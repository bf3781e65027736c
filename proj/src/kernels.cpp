#include "gmem/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gmem::kernels {
namespace {

void squared_distances_scalar(const double* rows, std::size_t n, std::size_t d, const double* x,
                              double* out) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rows + r * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - x[j];
      acc += diff * diff;
    }
    out[r] = acc;
  }
}

void row_dots_scalar(const double* rows, std::size_t n, std::size_t d, const double* x,
                     double* out) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rows + r * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
    out[r] = acc;
  }
}

void weighted_row_sum_scalar(const double* rows, std::size_t n, std::size_t d, const double* w,
                             double* out) {
  for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double wr = w[r];
    if (wr == 0.0) continue;
    const double* row = rows + r * d;
    for (std::size_t j = 0; j < d; ++j) out[j] += wr * row[j];
  }
}

constexpr KernelTable kScalar{Isa::scalar, "scalar", squared_distances_scalar, row_dots_scalar,
                              weighted_row_sum_scalar};
constexpr KernelTable kAvx2{Isa::avx2, "avx2", detail::squared_distances_avx2,
                            detail::row_dots_avx2, detail::weighted_row_sum_avx2};

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("GMEM_ISA")) {
    const std::string_view name(env);
    if (!name.empty()) return &table(parse_isa(name));
  }
  return &table(best_available());
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return detail::avx2_compiled() && cpu_has_avx2();
  }
  return false;
}

Isa best_available() { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
  if (!supported(isa))
    throw std::invalid_argument("kernel ISA '" + std::string(isa_name(isa)) +
                                "' is not supported on this CPU");
  return isa == Isa::avx2 ? kAvx2 : kScalar;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const KernelTable* fresh = initial_table();
    // First initialiser wins; a concurrent loser adopts the stored value.
    if (!g_active.compare_exchange_strong(t, fresh, std::memory_order_acq_rel)) return *t;
    return *fresh;
  }
  return *t;
}

void select(Isa isa) { g_active.store(&table(isa), std::memory_order_release); }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "auto") return best_available();
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Vector squared_distances(const RowMatrix& rows, const Vector& x) {
  if (x.size() != rows.cols()) throw std::invalid_argument("squared_distances: dimension mismatch");
  Vector out(rows.rows());
  active().squared_distances(rows.data(), static_cast<std::size_t>(rows.rows()),
                             static_cast<std::size_t>(rows.cols()), x.data(), out.data());
  return out;
}

Vector row_dots(const RowMatrix& rows, const Vector& x) {
  if (x.size() != rows.cols()) throw std::invalid_argument("row_dots: dimension mismatch");
  Vector out(rows.rows());
  active().row_dots(rows.data(), static_cast<std::size_t>(rows.rows()),
                    static_cast<std::size_t>(rows.cols()), x.data(), out.data());
  return out;
}

Vector weighted_row_sum(const RowMatrix& rows, const Vector& w) {
  if (w.size() != rows.rows()) throw std::invalid_argument("weighted_row_sum: weight count mismatch");
  Vector out(rows.cols());
  active().weighted_row_sum(rows.data(), static_cast<std::size_t>(rows.rows()),
                            static_cast<std::size_t>(rows.cols()), w.data(), out.data());
  return out;
}

}  // namespace gmem::kernels
