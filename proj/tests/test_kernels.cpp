#include "doctest.h"

#include "gmem/kernels.hpp"
#include "gmem/rng.hpp"

#include <cmath>
#include <vector>

using namespace gmem;

namespace {

struct Case {
  std::size_t n, d;
};

RowMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  return m;
}

Vector random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-13 * scale);
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels against plain loops") {
  const auto& k = kernels::table(kernels::Isa::scalar);
  const RowMatrix rows = random_rows(7, 5, 1);
  const Vector x = random_vec(5, 2);
  std::vector<double> out(7);
  k.squared_distances(rows.data(), 7, 5, x.data(), out.data());
  for (int r = 0; r < 7; ++r) {
    double s = 0;
    for (int j = 0; j < 5; ++j) s += (rows(r, j) - x(j)) * (rows(r, j) - x(j));
    CHECK(out[r] == doctest::Approx(s).epsilon(1e-14));
  }
  k.row_dots(rows.data(), 7, 5, x.data(), out.data());
  for (int r = 0; r < 7; ++r) {
    double s = 0;
    for (int j = 0; j < 5; ++j) s += rows(r, j) * x(j);
    CHECK(out[r] == doctest::Approx(s).epsilon(1e-14));
  }
  const Vector w = random_vec(7, 3);
  std::vector<double> acc(5, 99.0);
  k.weighted_row_sum(rows.data(), 7, 5, w.data(), acc.data());
  for (int j = 0; j < 5; ++j) {
    double s = 0;
    for (int r = 0; r < 7; ++r) s += w(r) * rows(r, j);
    CHECK(acc[j] == doctest::Approx(s).epsilon(1e-13));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::supported(kernels::Isa::avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  const auto& s = kernels::table(kernels::Isa::scalar);
  const auto& v = kernels::table(kernels::Isa::avx2);
  CHECK(v.isa == kernels::Isa::avx2);
  const Case cases[] = {{1, 1}, {1, 3}, {2, 4}, {3, 5}, {5, 7}, {8, 8}, {17, 30}, {33, 31},
                        {100, 64}, {257, 10}, {1000, 30}, {9, 1}};
  std::uint64_t seed = 10;
  for (const Case& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.d);
    const RowMatrix rows = random_rows(c.n, c.d, seed++);
    const Vector x = random_vec(c.d, seed++);
    Vector w = random_vec(c.n, seed++).cwiseAbs();
    if (c.n > 2) w(1) = 0.0;  // exercise the zero-weight skip
    std::vector<double> a(c.n), b(c.n);
    s.squared_distances(rows.data(), c.n, c.d, x.data(), a.data());
    v.squared_distances(rows.data(), c.n, c.d, x.data(), b.data());
    check_close(a, b, 4.0 * c.d);
    s.row_dots(rows.data(), c.n, c.d, x.data(), a.data());
    v.row_dots(rows.data(), c.n, c.d, x.data(), b.data());
    check_close(a, b, 4.0 * c.d);
    std::vector<double> sa(c.d, 5.0), sb(c.d, -5.0);
    s.weighted_row_sum(rows.data(), c.n, c.d, w.data(), sa.data());
    v.weighted_row_sum(rows.data(), c.n, c.d, w.data(), sb.data());
    check_close(sa, sb, 4.0 * c.n);
  }
}

TEST_CASE("runtime selection") {
  const kernels::Isa before = kernels::active().isa;
  kernels::select(kernels::Isa::scalar);
  CHECK(kernels::active().isa == kernels::Isa::scalar);
  const RowMatrix rows = random_rows(50, 9, 4);
  const Vector x = random_vec(9, 5);
  const Vector d_scalar = kernels::squared_distances(rows, x);
  kernels::select(kernels::best_available());
  const Vector d_best = kernels::squared_distances(rows, x);
  CHECK((d_scalar - d_best).cwiseAbs().maxCoeff() < 1e-12);
  kernels::select(before);

  CHECK(kernels::parse_isa("scalar") == kernels::Isa::scalar);
  CHECK(kernels::parse_isa("avx2") == kernels::Isa::avx2);
  CHECK(kernels::parse_isa("auto") == kernels::best_available());
  CHECK_THROWS_AS(kernels::parse_isa("neon9"), std::invalid_argument);
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
}

TEST_CASE("rng streams") {
  Rng a(1), b(1), c(2);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
  }
  CHECK(a.next_u64() != c.next_u64());
  CHECK(derive_seed(5, {1, 2, 3}) == derive_seed(5, {1, 2, 3}));
  CHECK(derive_seed(5, {1, 2, 3}) != derive_seed(5, {1, 2, 4}));
  CHECK(derive_seed(5, {1, 2, 3}) != derive_seed(6, {1, 2, 3}));
  CHECK(derive_seed(5, {1, 2}) != derive_seed(5, {2, 1}));

  Rng r(123);
  double m = 0, v = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m += z;
    v += z * z;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 5.0 / std::sqrt(n));
  CHECK(std::abs(v - 1.0) < 5.0 * std::sqrt(2.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

}
