#pragma once

#include "gmem/linear_model.hpp"
#include "gmem/score.hpp"
#include "gmem/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace gmem {

enum class SpectrumEstimator { forward, central, analytic, random_matrix };

std::string_view estimator_name(SpectrumEstimator e);

enum class ProbeMode { forward, central };

/// How the K Gaussian perturbations are drawn.
///   iid        - independent N(0, I) columns
///   orthogonal - the same Gaussian draws orthonormalised, so that
///                P P^T = K I when K >= d (columns scaled to norm sqrt(d)
///                when K < d). A linear oracle then yields its Jacobian's
///                singular values exactly.
enum class ProbeDesign { orthogonal, iid };

std::string_view probe_mode_name(ProbeMode m);
std::string_view probe_design_name(ProbeDesign p);
ProbeMode parse_probe_mode(std::string_view s);
ProbeDesign parse_probe_design(std::string_view s);

/// Sorted singular values with the metadata needed to interpret them.
struct SpectrumRecord {
  Vector raw;     // descending
  Vector values;  // raw * scale
  double scale = 1.0;
  std::string scaling;  // how scale was chosen, e.g. "sqrt(t/K)"
  StateVector x_star;
  double t = 0.0;
  std::string oracle;  // exact | empirical | active_sample | file_backed | theory
  std::size_t K = 0;   // probes; 0 for theory spectra
  SpectrumEstimator estimator = SpectrumEstimator::central;
  bool rank_deficient = false;  // K < d: only K values available

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

struct GapProfile {
  Vector gaps;          // gaps[k] = values[k] - values[k+1]
  std::size_t argmax;   // 1-based: number of values above the largest gap
};

struct DimensionEstimate {
  std::size_t k = 0;
  double c = 0.0;
  std::size_t discard = 0;
  Vector trace;              // |second difference|, centres discard+1 .. n-2
  std::size_t first_centre;  // full-spectrum index of trace[0]
  double threshold = 0.0;
  bool gap_found = false;
  std::size_t centre = 0;  // index where the threshold was first exceeded
};

/// d x K matrix of score evaluations around x0 at noise scale sqrt(t).
///   forward: column i = s(x0 + sqrt(t) e_i, t)
///   central: column i = (s(x0 + sqrt(t) e_i, t) - s(x0 - sqrt(t) e_i, t)) / 2
Matrix score_matrix(const ScoreOracle& oracle, const StateVector& x0, double t, std::size_t K,
                    std::uint64_t seed, ProbeMode mode = ProbeMode::central,
                    ProbeDesign design = ProbeDesign::orthogonal);

/// d x K perturbation directions used by score_matrix.
Matrix probe_directions(std::size_t d, std::size_t K, std::uint64_t seed, ProbeDesign design);

/// Descending singular values of S. scale defaults to 1.
/// Throws NumericalError on non-finite input.
SpectrumRecord singular_spectrum(const Matrix& S, double scale = 1.0,
                                 std::string scaling = "none");

/// Spectrum of score_matrix(...) scaled by sqrt(t / K), which puts it on the
/// scale of t |J| for a linear oracle.
SpectrumRecord probe_spectrum(const ScoreOracle& oracle, const StateVector& x0, double t,
                              std::size_t K, std::uint64_t seed,
                              ProbeMode mode = ProbeMode::central,
                              ProbeDesign design = ProbeDesign::orthogonal);

/// Column j = (s(x + sqrt(t) e_j, t) - s(x, t)) / sqrt(t)
Matrix smoothed_jacobian(const ScoreOracle& oracle, const StateVector& x, double t);

GapProfile gap_profile(const SpectrumRecord& record);

/// sigma2 (1 + alpha_m^-1/2)^2 / (t + sigma2 (1 + alpha_m^-1/2)^2)
double theoretical_gap(double sigma2, double t, double alpha_m);

using TcFunction = std::function<double(const StateVector&)>;

/// One draw of the fluctuating smoothed Jacobian: independent entries with
/// mean -delta_ij / (t + s_i) and variance
/// s_i / (t (t + s_i)) [phi(t, 0) + phi(t, e_j sqrt(t))], s_i = sigma_i^2.
/// variance_scale multiplies every variance (1 for the model itself).
Matrix random_matrix_jacobian(const ManifoldSpec& spec, double t, std::size_t dataset_size,
                              const TcFunction& tc_at, std::uint64_t seed,
                              double variance_scale = 1.0);

/// Singular values of a Jacobian sample, scaled by t.
SpectrumRecord jacobian_spectrum(const Matrix& J, double t, SpectrumEstimator estimator);

/// s_i = sqrt((t + s_i)^-2 + sum_k s_k / (t^2 (t + s_k)^2) [phi(t, 0) + phi(t, e_i sqrt(t))]^2),
/// sorted descending; values are scaled by t.
SpectrumRecord predicted_spectrum(const ManifoldSpec& spec, double t, std::size_t dataset_size,
                                  const TcFunction& tc_at);

/// First sharp jump in the spectrum: |second difference| after dropping the
/// leading `discard` values, compared with c times its median.
DimensionEstimate detect_dimension(const SpectrumRecord& record, double c = 10.0,
                                   std::size_t discard = 1);

}  // namespace gmem
