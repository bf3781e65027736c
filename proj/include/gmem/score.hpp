#pragma once

#include "gmem/linear_model.hpp"
#include "gmem/types.hpp"

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace gmem {

enum class OracleKind { exact, empirical, active_sample, file_backed };

std::string_view oracle_name(OracleKind kind);

/// s(x, t) = grad_x log p_t(x), evaluated by one of several routes.
///
/// Implementations are immutable after construction; evaluate() may be
/// called concurrently.
class ScoreOracle {
 public:
  virtual ~ScoreOracle() = default;
  virtual StateVector evaluate(const StateVector& x, double t) const = 0;
  virtual OracleKind kind() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
};

// ---------------------------------------------------------------------------
// Exact score of N(0, Lambda + t I)

/// s_i = -x_i / (sigma_i^2 + t)
StateVector exact_score(const ManifoldSpec& spec, const StateVector& x, double t);

/// t times the Jacobian of the exact score: diag(-t / (sigma_i^2 + t)).
Matrix exact_normalized_jacobian(const ManifoldSpec& spec, double t);

class ExactScore final : public ScoreOracle {
 public:
  explicit ExactScore(ManifoldSpec spec) : spec_(std::move(spec)) {}
  StateVector evaluate(const StateVector& x, double t) const override;
  OracleKind kind() const noexcept override { return OracleKind::exact; }
  std::size_t dim() const noexcept override { return spec_.ambient_dim(); }

 private:
  ManifoldSpec spec_;
};

// ---------------------------------------------------------------------------
// Empirical score of the N-point Gaussian mixture

/// log w_mu(x, t), the log posterior probability of pattern mu given x.
/// Normalised in log space, so it stays finite when every kernel underflows.
Vector empirical_log_weights(const Dataset& data, const StateVector& x, double t);

/// sum_mu w_mu (y_mu - x) / t
StateVector empirical_score(const Dataset& data, const StateVector& x, double t);

struct EnergyLevels {
  Vector energies;
};

/// E_mu(x) = |y_mu|^2 / 2 - x . y_mu, so that w_mu = softmax(-E / t).
EnergyLevels energy_levels(const Dataset& data, const StateVector& x);

/// log Z = log sum_mu exp(-beta E_mu(x))
double log_partition(const Dataset& data, const StateVector& x, double beta);

class EmpiricalScore final : public ScoreOracle {
 public:
  explicit EmpiricalScore(std::shared_ptr<const Dataset> data);
  StateVector evaluate(const StateVector& x, double t) const override;
  OracleKind kind() const noexcept override { return OracleKind::empirical; }
  std::size_t dim() const noexcept override { return data_->dim(); }
  const Dataset& dataset() const noexcept { return *data_; }

 private:
  std::shared_ptr<const Dataset> data_;
};

// ---------------------------------------------------------------------------
// Active-sample approximation: average over n posterior draws

StateVector active_sample_score(const ManifoldSpec& spec, const StateVector& x, double t,
                                std::size_t n_active, std::uint64_t seed);

/// Per-coordinate variance of the score estimator given n_eff samples:
/// (t s / (s + t)) / (n_eff t^2), s = sigma_i^2.
Vector estimator_variance(const ManifoldSpec& spec, const StateVector& x, double t, double n_eff);

class ActiveSampleScore final : public ScoreOracle {
 public:
  /// Fixed number of active samples per evaluation.
  ActiveSampleScore(ManifoldSpec spec, std::size_t n_active, std::uint64_t seed);

  /// Active-sample count taken from the condensation theory at every call:
  /// round(effective_n(t, tc_approx(x), dataset_size)).
  static ActiveSampleScore with_effective_count(ManifoldSpec spec, std::size_t dataset_size,
                                                std::uint64_t seed);

  StateVector evaluate(const StateVector& x, double t) const override;
  OracleKind kind() const noexcept override { return OracleKind::active_sample; }
  std::size_t dim() const noexcept override { return spec_.ambient_dim(); }

  /// Active-sample count that evaluate() uses at (x, t).
  std::size_t active_count(const StateVector& x, double t) const;

 private:
  ActiveSampleScore(ManifoldSpec spec, std::size_t n_active, std::size_t dataset_size,
                    std::uint64_t seed);

  ManifoldSpec spec_;
  std::size_t n_active_;      // 0 means "derive from effective_n"
  std::size_t dataset_size_;  // only used when n_active_ == 0
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Scores recorded elsewhere (e.g. a trained network), looked up verbatim

class FileBackedScore final : public ScoreOracle {
 public:
  struct Entry {
    StateVector x;
    double t;
    StateVector score;
  };

  explicit FileBackedScore(std::vector<Entry> entries);

  /// Returns the stored score for an exactly matching (x, t). Any other
  /// query throws std::out_of_range; no interpolation is attempted.
  StateVector evaluate(const StateVector& x, double t) const override;
  OracleKind kind() const noexcept override { return OracleKind::file_backed; }
  std::size_t dim() const noexcept override { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::size_t dim_;
};

}  // namespace gmem
