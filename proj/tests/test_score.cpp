#include "doctest.h"
#include "oracles.hpp"

#include "gmem/numeric.hpp"
#include "gmem/rng.hpp"
#include "gmem/score.hpp"

#include <cmath>
#include <memory>

using namespace gmem;

namespace {

Dataset make_data(const ManifoldSpec& s, std::size_t n, std::uint64_t seed) {
  return sample_dataset(s, n, seed);
}

Dataset points_1d(std::initializer_list<double> ys) {
  RowMatrix p(static_cast<Eigen::Index>(ys.size()), 1);
  Eigen::Index i = 0;
  for (double y : ys) p(i++, 0) = y;
  return Dataset(ManifoldSpec(1, {{1, 1.0}}), p, 0);
}

}  // namespace

TEST_SUITE("score_engine") {

TEST_CASE("exact score values") {
  const ManifoldSpec iso(2, {{2, 1.0}});
  CHECK(exact_score(iso, Vector::Zero(2), 0.3).isZero(0.0));
  Vector x(2);
  x << 2.0, 0.0;
  const Vector s = exact_score(iso, x, 1.0);
  CHECK(s(0) == doctest::Approx(-1.0));
  CHECK(s(1) == 0.0);

  const ManifoldSpec partial(2, {{1, 1.0}});
  Vector e(2);
  e << 0.0, 1.0;
  CHECK(exact_score(partial, e, 0.5)(1) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(exact_score(iso, x, 0.0), std::invalid_argument);
}

TEST_CASE("normalized exact jacobian") {
  const ManifoldSpec s(3, {{1, 1.0}});
  const Matrix J = exact_normalized_jacobian(s, 1.0);
  CHECK(J(0, 0) == doctest::Approx(-0.5));
  CHECK(J(1, 1) == doctest::Approx(-1.0));
  CHECK(J(0, 1) == 0.0);
  CHECK((J - J.transpose()).isZero(0.0));
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(J).eigenvalues().maxCoeff() <= 0.0);

  // limits
  const Matrix small = exact_normalized_jacobian(s, 1e-12);
  CHECK(std::abs(small(0, 0)) < 1e-11);
  CHECK(small(2, 2) == doctest::Approx(-1.0));

  // t times the derivative of the exact score
  const ManifoldSpec f4(30, {{2, 1.0}, {5, 0.3}});
  const double t = 0.2;
  const Matrix Jn = exact_normalized_jacobian(f4, t);
  for (Eigen::Index i = 0; i < 30; ++i)
    CHECK(Jn(i, i) == doctest::Approx(-t / (f4.variances()(i) + t)).epsilon(1e-15));
}

TEST_CASE("log weights") {
  SUBCASE("single pattern has weight one") {
    const Dataset d = points_1d({0.7});
    Vector x(1);
    x << -3.0;
    CHECK(empirical_log_weights(d, x, 0.1)(0) == doctest::Approx(0.0));
  }
  SUBCASE("equidistant patterns share weight") {
    const Dataset d = points_1d({-1.0, 1.0});
    const Vector w = empirical_log_weights(d, Vector::Zero(1), 0.37).array().exp();
    CHECK(w(0) == doctest::Approx(0.5));
    CHECK(w(1) == doctest::Approx(0.5));
  }
  SUBCASE("two-point kernel ratio") {
    const Dataset d = points_1d({0.0, 1.0});
    const Vector w = empirical_log_weights(d, Vector::Zero(1), 1.0).array().exp();
    CHECK(w(0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-14));
    CHECK(w(0) == doctest::Approx(0.62246).epsilon(1e-5));
  }
  SUBCASE("matches direct weights") {
    const ManifoldSpec s(6, {{4, 1.0}});
    const Dataset d = make_data(s, 40, 3);
    Rng rng(4);
    Vector x(6);
    for (auto& v : x) v = rng.normal();
    const auto ref = oracle::direct_weights(d.points, x, 0.8);
    const Vector w = empirical_log_weights(d, x, 0.8).array().exp();
    for (Eigen::Index i = 0; i < 40; ++i)
      CHECK(std::abs(w(i) - static_cast<double>(ref[static_cast<std::size_t>(i)])) < 1e-14);
  }
  SUBCASE("normalised across many orders of magnitude") {
    const ManifoldSpec s(5, {{5, 1.0}});
    const Dataset d = make_data(s, 300, 8);
    Vector x(5);
    x << 3.0, -2.0, 0.5, 9.0, 1.0;
    for (double t = 1e-6; t <= 1e3; t *= 10.0) {
      const Vector w = empirical_log_weights(d, x, t).array().exp();
      CHECK(std::isfinite(w.sum()));
      CHECK(std::abs(w.sum() - 1.0) < 1e-12);
      CHECK((w.array() >= 0.0).all());
    }
  }
  CHECK_THROWS_AS(empirical_log_weights(points_1d({1.0}), Vector::Zero(1), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(empirical_log_weights(points_1d({1.0}), Vector::Zero(2), 1.0),
                  std::invalid_argument);
}

TEST_CASE("empirical score special cases") {
  const Dataset one = points_1d({2.5});
  Vector x(1);
  x << -1.0;
  CHECK(empirical_score(one, x, 0.5)(0) == doctest::Approx((2.5 + 1.0) / 0.5));

  const Dataset two = points_1d({-1.0, 3.0});
  Vector mid(1);
  mid << 1.0;
  CHECK(std::abs(empirical_score(two, mid, 4.2)(0)) < 1e-14);
}

TEST_CASE("empirical score is the gradient of the log mixture") {
  const ManifoldSpec s(10, {{6, 1.0}, {2, 0.3}});
  const Dataset d = make_data(s, 200, 21);
  Rng rng(22);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    Vector x(10);
    for (auto& v : x) v = rng.normal();
    const double t = std::exp(std::log(1e-2) + rng.uniform() * (std::log(10.0) - std::log(1e-2)));
    const double h = 1e-5 * (1.0 + x.norm());
    const Vector fd = oracle::mixture_gradient(d.points, x, t, h);
    const Vector s_emp = empirical_score(d, x, t);
    worst = std::max(worst, (s_emp - fd).norm() / fd.norm());
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("memorization limit") {
  const ManifoldSpec s(4, {{4, 1.0}});
  const Dataset d = make_data(s, 30, 5);
  Vector x = d.points.row(7).transpose();
  x(0) += 0.01;
  const double t = 1e-5;
  const Vector w = empirical_log_weights(d, x, t).array().exp();
  CHECK(w(7) == doctest::Approx(1.0).epsilon(1e-9));
  const Vector expect = (d.points.row(7).transpose() - x) / t;
  CHECK((empirical_score(d, x, t) - expect).norm() < 1e-6 * expect.norm());
}

TEST_CASE("empirical score converges to the exact score") {
  const ManifoldSpec s(2, {{2, 1.0}});
  Vector x(2);
  x << 1.0, 0.0;
  const Vector exact = exact_score(s, x, 1.0);
  const Dataset big = make_data(s, 10000, 1);
  CHECK((empirical_score(big, x, 1.0) - exact).cwiseAbs().maxCoeff() < 0.05);

  // error ~ N^-1/2: log-log slope over four decades, averaged over datasets
  std::vector<double> logn, loge;
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    double err = 0;
    const int reps = 12;
    for (int r = 0; r < reps; ++r)
      err += (empirical_score(make_data(s, n, 1000 + r * 7 + n), x, 1.0) - exact).squaredNorm();
    logn.push_back(std::log(static_cast<double>(n)));
    loge.push_back(0.5 * std::log(err / reps));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    mx += logn[i] / 4;
    my += loge[i] / 4;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (logn[i] - mx) * (loge[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  const double slope = sxy / sxx;
  CAPTURE(slope);
  CHECK(std::abs(slope + 0.5) < 0.15);
}

TEST_CASE("energies, weights and partition function") {
  const ManifoldSpec s(3, {{3, 1.0}});
  RowMatrix zero = RowMatrix::Zero(2, 3);
  const Dataset zd(s, zero, 0);
  Vector x(3);
  x << 1.0, 2.0, 3.0;
  CHECK(energy_levels(zd, x).energies.isZero(0.0));
  CHECK(log_partition(zd, x, 0.7) == doctest::Approx(std::log(2.0)));

  const Dataset d = make_data(s, 25, 2);
  const Vector e0 = energy_levels(d, Vector::Zero(3)).energies;
  for (Eigen::Index i = 0; i < 25; ++i)
    CHECK(e0(i) == doctest::Approx(0.5 * d.points.row(i).squaredNorm()));

  // softmax(-E / t) is the posterior weight vector
  const double t = 0.6;
  const Vector E = energy_levels(d, x).energies;
  Vector sm = (-E / t).array().exp();
  sm /= sm.sum();
  const Vector w = empirical_log_weights(d, x, t).array().exp();
  CHECK((sm - w).cwiseAbs().maxCoeff() < 1e-12);

  // brute-force partition sum
  const double beta = 0.9;
  long double z = 0;
  for (Eigen::Index i = 0; i < 25; ++i) z += std::exp(-static_cast<long double>(beta) * E(i));
  CHECK(std::abs(log_partition(d, x, beta) - static_cast<double>(std::log(z))) < 1e-12);

  RowMatrix one(1, 3);
  one << 1.0, 0.0, 0.0;
  const Dataset od(s, one, 0);
  Vector xo = Vector::Zero(3);
  xo(0) = 3.0;
  const double c = energy_levels(od, xo).energies(0);
  CHECK(c == doctest::Approx(0.5 - 3.0));
  CHECK(log_partition(od, xo, 2.0) == doctest::Approx(-2.0 * c));
  CHECK_THROWS_AS(log_partition(od, xo, 0.0), std::invalid_argument);
}

TEST_CASE("active-sample score") {
  const ManifoldSpec s(3, {{2, 1.0}, {1, 0.25}});
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  const double t = 0.5;
  const Vector exact = exact_score(s, x, t);

  SUBCASE("mean over many samples approaches the exact score") {
    const std::size_t n = 200000;
    const Vector est = active_sample_score(s, x, t, n, 99);
    const Vector sd = estimator_variance(s, x, t, static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(est(i) - exact(i)) < 5 * sd(i) + 1e-15);
  }
  SUBCASE("degenerate posterior is deterministic") {
    const ManifoldSpec tiny(3, {{1, 1.0}});
    const Vector a = active_sample_score(tiny, x, t, 3, 1);
    const Vector b = active_sample_score(tiny, x, t, 3, 2);
    CHECK(a(1) == doctest::Approx(-x(1) / t));
    CHECK(a(2) == doctest::Approx(-x(2) / t));
    CHECK(a(1) == b(1));
  }
  SUBCASE("spread matches the estimator variance") {
    const std::size_t n_active = 4;
    const int trials = 10000;
    Vector m = Vector::Zero(3), m2 = Vector::Zero(3);
    for (int k = 0; k < trials; ++k) {
      const Vector v = active_sample_score(s, x, t, n_active, derive_seed(7, {std::uint64_t(k)}));
      m += v;
      m2 += v.cwiseAbs2();
    }
    m /= trials;
    const Vector var = m2 / trials - m.cwiseAbs2();
    const Vector pred = estimator_variance(s, x, t, n_active);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(var(i) == doctest::Approx(pred(i)).epsilon(0.05));
  }
  CHECK_THROWS_AS(active_sample_score(s, x, t, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(active_sample_score(s, x, 0.0, 1, 1), std::invalid_argument);
}

TEST_CASE("estimator variance") {
  const ManifoldSpec s(2, {{1, 1.0}});
  Vector x = Vector::Zero(2);
  const Vector v = estimator_variance(s, x, 1.0, 10.0);
  CHECK(v(0) == doctest::Approx(0.5 / 10.0));
  CHECK(v(1) == 0.0);
  CHECK(estimator_variance(s, x, 1.0, 1e12)(0) < 1e-12);
  CHECK_THROWS_AS(estimator_variance(s, x, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(estimator_variance(s, x, -1.0, 2.0), std::invalid_argument);
}

TEST_CASE("oracles share one contract") {
  const ManifoldSpec s(4, {{2, 1.0}});
  auto data = std::make_shared<const Dataset>(sample_dataset(s, 50, 1));
  const ExactScore ex(s);
  const EmpiricalScore em(data);
  const ActiveSampleScore fixed(s, 8, 3);
  const auto derived = ActiveSampleScore::with_effective_count(s, 1000, 3);
  Vector x(4);
  x << 0.3, -0.1, 0.0, 0.2;

  CHECK(ex.kind() == OracleKind::exact);
  CHECK(em.kind() == OracleKind::empirical);
  CHECK(fixed.kind() == OracleKind::active_sample);
  CHECK(oracle_name(OracleKind::file_backed) == "file_backed");
  CHECK(ex.dim() == 4);
  CHECK(em.dim() == 4);

  CHECK(ex.evaluate(x, 0.5) == exact_score(s, x, 0.5));
  CHECK(em.evaluate(x, 0.5) == empirical_score(*data, x, 0.5));
  CHECK(fixed.evaluate(x, 0.5) == fixed.evaluate(x, 0.5));
  CHECK(fixed.active_count(x, 0.5) == 8);
  // effective count: 1 deep in the condensed phase, N above tc
  CHECK(derived.active_count(x, 1e-6) == 1);
  CHECK(derived.active_count(x, 1e6) == 1000);

  FileBackedScore fb({{x, 0.5, Vector::Ones(4)}});
  CHECK(fb.kind() == OracleKind::file_backed);
  CHECK(fb.evaluate(x, 0.5) == Vector::Ones(4));
  CHECK_THROWS_AS(fb.evaluate(x, 0.6), std::out_of_range);
  CHECK_THROWS_AS(fb.evaluate(Vector::Zero(4), 0.5), std::out_of_range);
}

TEST_CASE("logsumexp") {
  Vector v(3);
  v << 1000.0, 1000.0, -1e9;
  CHECK(logsumexp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(std::isinf(logsumexp(Vector())));
}

}
