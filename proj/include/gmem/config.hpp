#pragma once

#include "gmem/linear_model.hpp"
#include "gmem/spectral.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace gmem {

enum class HarnessEstimator { exact, empirical, analytic, random_matrix };
enum class TcMethod { approx, exact };
enum class XStarChoice { origin, data_point };

std::string_view harness_estimator_name(HarnessEstimator e);

/// Experiment description shared by the generate, spectra and dims commands.
///
/// JSON keys mirror the field names. Required: spec, N_list, t_grid.
/// t_grid is either an explicit array or {"min", "max", "points"} (log
/// spaced). Any key not listed here is rejected.
struct ExperimentConfig {
  ManifoldSpec spec{1, {{1, 1.0}}};
  std::vector<std::size_t> N_list;
  std::vector<double> t_grid;
  int repetitions = 1;
  std::vector<HarnessEstimator> estimators{HarnessEstimator::exact, HarnessEstimator::empirical,
                                           HarnessEstimator::analytic,
                                           HarnessEstimator::random_matrix};
  std::size_t K = 0;  // 0 = max(4 d, 100)
  double c = 10.0;
  std::size_t discard = 1;
  std::uint64_t master_seed = 0;
  TcMethod tc_method = TcMethod::approx;
  bool fresh_dataset_per_rep = true;
  XStarChoice x_star = XStarChoice::origin;
  ProbeMode probe_mode = ProbeMode::central;
  ProbeDesign probe_design = ProbeDesign::orthogonal;

  std::size_t probes() const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Fully resolved config; parse_experiment_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& c);

/// Condensation-time comparison on a random-projection spectrum:
/// F is d x m with N(0, projection_scale^2) entries, the spec variances are
/// the eigenvalues of F^T F padded with d - m zeros.
///   mode "alpha":     one random x, tc_exact and tc_approx over alpha_grid
///   mode "positions": `positions` random x at fixed alpha
struct TcConfig {
  enum class Mode { alpha, positions };
  Mode mode = Mode::alpha;
  std::size_t ambient_dim = 100;
  std::size_t latent_dim = 50;
  double projection_scale = 1.0;
  std::vector<double> alpha_grid;
  double alpha = 0.15;
  std::size_t positions = 2000;
  double x_scale = 1.0;  // x ~ N(0, x_scale^2 I)
  std::uint64_t master_seed = 0;
};

TcConfig parse_tc_config(const nlohmann::json& j);
TcConfig load_tc_config(const std::filesystem::path& path);
nlohmann::json to_json(const TcConfig& c);

/// n points log-spaced on [lo, hi], endpoints exact.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace gmem
