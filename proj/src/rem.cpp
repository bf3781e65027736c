#include "gmem/rem.hpp"

#include "gmem/score.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmem {

namespace {

// Per-coordinate a_i = 1 + lambda s_i / t, checked for the log domain.
Eigen::ArrayXd shifted(const ManifoldSpec& spec, double t, double lambda, const char* where) {
  Eigen::ArrayXd a = 1.0 + lambda * spec.variances().array() / t;
  if ((a <= 0.0).any())
    throw std::domain_error(std::string(where) + ": 1 + lambda sigma^2 / t must stay positive");
  return a;
}

}  // namespace

double zeta(const ManifoldSpec& spec, const StateVector& x, double t, double lambda) {
  detail::require_dim(spec, x, "zeta");
  detail::require_positive_time(t, "zeta");
  const Eigen::ArrayXd a = shifted(spec, t, lambda, "zeta");
  const auto s = spec.variances().array();
  const auto x2 = x.array().square();
  const double d = static_cast<double>(spec.ambient_dim());
  const double log_term = -0.5 * a.log().sum();
  const double field_term = lambda * lambda / (2.0 * t * t) * (x2 * s / a).sum();
  return (log_term + field_term) / d;
}

double zeta_prime(const ManifoldSpec& spec, const StateVector& x, double t, double lambda) {
  detail::require_dim(spec, x, "zeta_prime");
  detail::require_positive_time(t, "zeta_prime");
  const Eigen::ArrayXd a = shifted(spec, t, lambda, "zeta_prime");
  const auto s = spec.variances().array();
  const auto x2 = x.array().square();
  const double d = static_cast<double>(spec.ambient_dim());
  const double first = -(s / a).sum() / (2.0 * t);
  const double second = lambda / (t * t) * (x2 * s / a).sum();
  const double third = -lambda * lambda / (2.0 * t * t * t) * (x2 * s.square() / a.square()).sum();
  return (first + second + third) / d;
}

double condensation_residual(const ManifoldSpec& spec, const StateVector& x, double alpha,
                             double t) {
  return alpha + zeta(spec, x, t, 1.0) - zeta_prime(spec, x, t, 1.0);
}

CondensationRoot tc_exact(const ManifoldSpec& spec, const StateVector& x, double alpha,
                          const TcExactOptions& options) {
  if (!(alpha > 0.0)) throw std::invalid_argument("tc_exact: alpha must be positive");
  if (!(options.bracket_lo > 0.0) || !(options.bracket_hi > options.bracket_lo) ||
      options.scan_points < 2)
    throw std::invalid_argument("tc_exact: invalid bracket");
  detail::require_dim(spec, x, "tc_exact");

  auto g = [&](double t) { return condensation_residual(spec, x, alpha, t); };

  const double log_lo = std::log(options.bracket_lo);
  const double log_hi = std::log(options.bracket_hi);
  const int n = options.scan_points;
  std::vector<double> grid(static_cast<std::size_t>(n));
  std::vector<double> values(grid.size());
  for (int i = 0; i < n; ++i) {
    grid[i] = i == n - 1 ? options.bracket_hi
                         : std::exp(log_lo + (log_hi - log_lo) * i / static_cast<double>(n - 1));
    values[i] = g(grid[i]);
  }

  int first_change = -1;
  int changes = 0;
  for (int i = 0; i + 1 < n; ++i) {
    if (values[i] == 0.0) {
      return {grid[i], 0.0, 0, grid[i], grid[i], true, false};
    }
    if ((values[i] < 0.0) != (values[i + 1] < 0.0)) {
      if (first_change < 0) first_change = i;
      ++changes;
    }
  }
  if (first_change < 0)
    throw NumericalError("tc_exact: no sign change in bracket [" +
                         std::to_string(options.bracket_lo) + ", " +
                         std::to_string(options.bracket_hi) + "]");

  double lo = grid[first_change];
  double hi = grid[first_change + 1];
  const bool negative_at_lo = values[first_change] < 0.0;
  CondensationRoot root{0.0, 0.0, 0, lo, hi, false, changes > 1};

  // Bisection on log t: the bracket spans many decades.
  double mid = std::sqrt(lo * hi);
  double gm = g(mid);
  int it = 1;
  for (; it <= options.max_iterations; ++it) {
    if (std::abs(gm) < options.tolerance) break;
    if ((gm < 0.0) == negative_at_lo)
      lo = mid;
    else
      hi = mid;
    const double next = std::sqrt(lo * hi);
    if (next == lo || next == hi) break;  // interval exhausted at double precision
    mid = next;
    gm = g(mid);
  }
  root.t = mid;
  root.residual = gm;
  root.iterations = std::min(it, options.max_iterations);
  root.converged = std::abs(gm) < options.tolerance;
  return root;
}

double tc_approx_at_alpha(const ManifoldSpec& spec, const StateVector& x, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("tc_approx: alpha must be positive");
  const double r4 = norm_moments(spec).r4;
  return std::sqrt((0.5 * r4 + variance_density(spec, x)) / (2.0 * alpha));
}

double tc_approx(const ManifoldSpec& spec, const StateVector& x, std::size_t dataset_size) {
  if (dataset_size < 2) throw std::invalid_argument("tc_approx: N must be >= 2");
  const double alpha = std::log(static_cast<double>(dataset_size)) /
                       static_cast<double>(spec.ambient_dim());
  return tc_approx_at_alpha(spec, x, alpha);
}

double phi(double t, double tc, std::size_t dataset_size) {
  if (!(t > 0.0) || !(tc > 0.0) || dataset_size < 1)
    throw std::invalid_argument("phi: t, tc and N must be positive");
  return std::max(1.0 / static_cast<double>(dataset_size), 1.0 / t - 1.0 / tc);
}

double effective_n(double t, double tc, std::size_t dataset_size) {
  if (!(t > 0.0) || !(tc > 0.0) || dataset_size < 1)
    throw std::invalid_argument("effective_n: t, tc and N must be positive");
  const double n = static_cast<double>(dataset_size);
  if (t >= tc) return n;
  return std::min(n, tc / (tc - t));
}

double participation_ratio(const Dataset& data, const StateVector& x, double t) {
  detail::require_positive_time(t, "participation_ratio");
  const double beta = 1.0 / t;
  return std::exp(log_partition(data, x, 2.0 * beta) - 2.0 * log_partition(data, x, beta));
}

double expected_participation(double t, double tc) {
  if (!(t > 0.0) || !(tc > 0.0)) throw std::invalid_argument("expected_participation: t, tc > 0");
  if (t > tc)
    throw std::domain_error("expected_participation: only defined for t <= tc (condensed phase)");
  return 1.0 - t / tc;
}

CondensationProfile condensation_profile(const ManifoldSpec& spec, const StateVector& x,
                                         std::size_t dataset_size,
                                         const TcExactOptions& options) {
  const double alpha = std::log(static_cast<double>(dataset_size)) /
                       static_cast<double>(spec.ambient_dim());
  CondensationProfile profile{x, alpha, std::nullopt, tc_approx(spec, x, dataset_size)};
  try {
    profile.exact = tc_exact(spec, x, alpha, options);
  } catch (const NumericalError&) {
    // reported as "none found"
  }
  return profile;
}

}  // namespace gmem
