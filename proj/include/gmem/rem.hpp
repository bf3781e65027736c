#pragma once

// Positional random-energy-model quantities for linear-manifold data:
// cumulant generating function of the energies, condensation time (root of
// the entropy-crisis condition and its closed-form large-t approximation),
// and the participation-ratio / effective-sample-count relations.

#include "gmem/linear_model.hpp"
#include "gmem/types.hpp"

#include <optional>

namespace gmem {

/// Finite-d zeta(lambda) = d^-1 [ -1/2 sum log(1 + lambda s_i / t)
///                               + lambda^2 / (2 t^2) sum x_i^2 s_i / (1 + lambda s_i / t) ]
/// Throws std::domain_error when some 1 + lambda s_i / t <= 0.
double zeta(const ManifoldSpec& spec, const StateVector& x, double t, double lambda);

/// d zeta / d lambda.
double zeta_prime(const ManifoldSpec& spec, const StateVector& x, double t, double lambda);

/// alpha + zeta(1) - zeta'(1); its zero in t is the condensation time.
double condensation_residual(const ManifoldSpec& spec, const StateVector& x, double alpha,
                             double t);

struct TcExactOptions {
  double bracket_lo = 1e-8;
  double bracket_hi = 1e6;
  int max_iterations = 200;
  double tolerance = 1e-10;  // on |residual|
  int scan_points = 141;     // sign-change scan across the bracket (log grid)
};

struct CondensationRoot {
  double t;
  double residual;
  int iterations;
  double bracket_lo;  // sub-bracket actually bisected
  double bracket_hi;
  bool converged;
  bool multiple_roots;  // more than one sign change seen; smallest root returned
};

/// Bisection root of alpha + zeta(1; t) - zeta'(1; t) = 0.
/// Throws NumericalError when the residual does not change sign in the bracket.
CondensationRoot tc_exact(const ManifoldSpec& spec, const StateVector& x, double alpha,
                          const TcExactOptions& options = {});

/// sqrt((r4 / 2 + omega^2(x)) / (2 alpha)), alpha = log(N) / d. Requires N >= 2.
double tc_approx(const ManifoldSpec& spec, const StateVector& x, std::size_t dataset_size);

/// The same closed form with alpha given directly.
double tc_approx_at_alpha(const ManifoldSpec& spec, const StateVector& x, double alpha);

/// max(1/N, 1/t - 1/tc)
double phi(double t, double tc, std::size_t dataset_size);

/// Number of patterns effectively averaged by the empirical score:
/// min(N, tc / (tc - t)) below tc, N at or above it.
double effective_n(double t, double tc, std::size_t dataset_size);

/// Y = Z(2 beta) / Z(beta)^2 = sum_mu w_mu^2 at beta = 1/t.
double participation_ratio(const Dataset& data, const StateVector& x, double t);

/// Thermodynamic-limit E[Y] = 1 - t / tc for 0 < t <= tc.
double expected_participation(double t, double tc);

struct CondensationProfile {
  StateVector x;
  double alpha;
  std::optional<CondensationRoot> exact;  // empty when no root was bracketed
  double approx;
};

CondensationProfile condensation_profile(const ManifoldSpec& spec, const StateVector& x,
                                         std::size_t dataset_size,
                                         const TcExactOptions& options = {});

}  // namespace gmem
