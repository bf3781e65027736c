#pragma once

#include "gmem/config.hpp"
#include "gmem/io.hpp"
#include "gmem/rem.hpp"
#include "gmem/spectral.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace gmem {

struct CellSeed {
  std::string cell;
  std::uint64_t seed;
};

/// Seed streams of the experiment grid. Each is derive_seed over the master
/// seed and the cell coordinates, so cells never share a stream.
std::uint64_t dataset_seed(std::uint64_t master, std::size_t n_index, int rep);
std::uint64_t cell_seed(std::uint64_t master, std::size_t n_index, std::size_t t_index, int rep,
                        HarnessEstimator estimator);

/// tc(x) for a dataset size under the configured method.
TcFunction make_tc_function(const ManifoldSpec& spec, std::size_t dataset_size, TcMethod method);

/// Runs fn(0..count-1) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Spectra as a function of time

struct SpectrumCell {
  HarnessEstimator estimator;
  std::size_t n_index;
  std::size_t t_index;
  int rep;
  std::uint64_t seed;
  SpectrumRecord record;
};

struct MeanSpectrum {
  HarnessEstimator estimator;
  std::size_t n_index;
  std::size_t t_index;
  Vector raw;     // index-wise mean of the sorted raw spectra
  Vector scaled;  // index-wise mean of the sorted scaled spectra
};

struct SpectraResult {
  std::vector<SpectrumCell> cells;  // estimator, N, t, rep order
  std::vector<MeanSpectrum> means;  // estimator, N, t order
  std::vector<CellSeed> seeds;

  const MeanSpectrum& mean(HarnessEstimator e, std::size_t n_index, std::size_t t_index) const;
};

SpectraResult run_spectra_vs_time(const ExperimentConfig& config, unsigned threads = 1);

/// Writes spectra_<estimator>.csv (per-repetition rows followed by rep=mean
/// rows) for each estimator; returns the file names.
std::vector<std::string> write_spectra(const std::filesystem::path& dir,
                                       const ExperimentConfig& config,
                                       const SpectraResult& result);

// ---------------------------------------------------------------------------
// Dimension detection sweep

struct DimensionRow {
  HarnessEstimator estimator;
  std::size_t N;
  double t;
  std::vector<std::size_t> k;  // per repetition
  std::vector<bool> gap_found;
  double k_mean;
  double no_gap_rate;
};

struct DimensionSweepResult {
  std::vector<DimensionRow> rows;
  std::vector<CellSeed> seeds;
};

DimensionSweepResult run_dimension_sweep(const ExperimentConfig& config, unsigned threads = 1);

/// dims.csv (estimator,N,t,reps,k_mean,no_gap_rate) and dims_reps.csv
/// (estimator,N,t,rep,k,gap_found).
std::vector<std::string> write_dimension_sweep(const std::filesystem::path& dir,
                                               const DimensionSweepResult& result);

// ---------------------------------------------------------------------------
// Condensation time comparison

struct TcRow {
  std::size_t id;
  double alpha;
  double omega2;
  double tc_exact;  // NaN when no root was found
  double tc_approx;
  std::string status;  // ok | no_root | not_converged
  int iterations;
  double residual;
  bool multiple_roots;
};

struct TcResult {
  ManifoldSpec spec{1, {{1, 1.0}}};
  std::vector<TcRow> rows;
  nlohmann::json summary;
};

/// Random-projection spectrum as described in TcConfig.
ManifoldSpec projection_spec(std::size_t ambient_dim, std::size_t latent_dim, double scale,
                             std::uint64_t seed);

TcResult run_tc_comparison(const TcConfig& config, unsigned threads = 1);

/// tc.csv: id,alpha,omega2,tc_exact,tc_approx,status,iterations,residual,multiple_roots
std::vector<std::string> write_tc(const std::filesystem::path& dir, const TcResult& result);

/// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Externally produced score samples

struct ScoreFileAnalysis {
  ScoreSampleFile file;
  SpectrumRecord spectrum;
  GapProfile gaps;
  DimensionEstimate dimension;
};

/// SVD of the stored scores (columns are score vectors), gap profile and
/// detected dimension. Never evaluates a score.
ScoreFileAnalysis analyze_score_file(const std::filesystem::path& path, double c = 10.0,
                                     std::size_t discard = 1);

std::vector<std::string> write_analysis(const std::filesystem::path& dir,
                                        const ScoreFileAnalysis& analysis);

// ---------------------------------------------------------------------------
// Datasets and manifests

/// dataset_N<N>.csv for every N, drawn with the repetition-0 dataset seeds.
std::vector<std::string> write_datasets(const std::filesystem::path& dir,
                                        const ExperimentConfig& config);

struct ManifestInfo {
  std::string command;
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  std::vector<CellSeed> seeds;
  std::vector<std::string> files;
  double wall_clock_seconds = 0.0;
};

nlohmann::json make_manifest(const ManifestInfo& info);

/// Writes <dir>/manifest.json.
void write_manifest(const std::filesystem::path& dir, const ManifestInfo& info);

}  // namespace gmem
