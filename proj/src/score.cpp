#include "gmem/score.hpp"

#include "gmem/kernels.hpp"
#include "gmem/numeric.hpp"
#include "gmem/rem.hpp"
#include "gmem/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gmem {

std::string_view oracle_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::exact:
      return "exact";
    case OracleKind::empirical:
      return "empirical";
    case OracleKind::active_sample:
      return "active_sample";
    case OracleKind::file_backed:
      return "file_backed";
  }
  return "unknown";
}

namespace {

void require_data_dim(const Dataset& data, const StateVector& x, const char* where) {
  if (static_cast<std::size_t>(x.size()) != data.dim())
    throw std::invalid_argument(std::string(where) + ": state has dimension " +
                                std::to_string(x.size()) + ", dataset has " +
                                std::to_string(data.dim()));
}

}  // namespace

StateVector exact_score(const ManifoldSpec& spec, const StateVector& x, double t) {
  detail::require_dim(spec, x, "exact_score");
  detail::require_positive_time(t, "exact_score");
  return -(x.array() / (spec.variances().array() + t)).matrix();
}

Matrix exact_normalized_jacobian(const ManifoldSpec& spec, double t) {
  detail::require_positive_time(t, "exact_normalized_jacobian");
  const Vector diag = -(t / (spec.variances().array() + t)).matrix();
  return diag.asDiagonal();
}

StateVector ExactScore::evaluate(const StateVector& x, double t) const {
  return exact_score(spec_, x, t);
}

Vector empirical_log_weights(const Dataset& data, const StateVector& x, double t) {
  require_data_dim(data, x, "empirical_log_weights");
  detail::require_positive_time(t, "empirical_log_weights");
  Vector logits = kernels::squared_distances(data.points, x) * (-0.5 / t);
  logits.array() -= logsumexp(logits);
  return logits;
}

StateVector empirical_score(const Dataset& data, const StateVector& x, double t) {
  const Vector w = empirical_log_weights(data, x, t).array().exp().matrix();
  // sum_mu w_mu (y_mu - x) = ybar - x because the weights sum to one.
  return (kernels::weighted_row_sum(data.points, w) - x) / t;
}

EnergyLevels energy_levels(const Dataset& data, const StateVector& x) {
  require_data_dim(data, x, "energy_levels");
  Vector energies = 0.5 * data.points.rowwise().squaredNorm();
  energies -= kernels::row_dots(data.points, x);
  return {std::move(energies)};
}

double log_partition(const Dataset& data, const StateVector& x, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("log_partition: beta must be positive and finite");
  const Vector neg = -beta * energy_levels(data, x).energies;
  return logsumexp(neg);
}

EmpiricalScore::EmpiricalScore(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {
  if (!data_) throw std::invalid_argument("EmpiricalScore: null dataset");
}

StateVector EmpiricalScore::evaluate(const StateVector& x, double t) const {
  return empirical_score(*data_, x, t);
}

StateVector active_sample_score(const ManifoldSpec& spec, const StateVector& x, double t,
                                std::size_t n_active, std::uint64_t seed) {
  if (n_active < 1) throw std::invalid_argument("active_sample_score: n_active must be >= 1");
  const auto draws = posterior_sample(spec, x, t, n_active, seed);
  Vector mean = Vector::Zero(x.size());
  for (const auto& y : draws) mean += y;
  mean /= static_cast<double>(n_active);
  return (mean - x) / t;
}

Vector estimator_variance(const ManifoldSpec& spec, const StateVector& x, double t, double n_eff) {
  detail::require_dim(spec, x, "estimator_variance");
  detail::require_positive_time(t, "estimator_variance");
  if (!(n_eff >= 1.0)) throw std::invalid_argument("estimator_variance: n_eff must be >= 1");
  const auto s = spec.variances().array();
  return ((t * s / (s + t)) / (n_eff * t * t)).matrix();
}

ActiveSampleScore::ActiveSampleScore(ManifoldSpec spec, std::size_t n_active, std::uint64_t seed)
    : ActiveSampleScore(std::move(spec), n_active, 0, seed) {
  if (n_active < 1) throw std::invalid_argument("ActiveSampleScore: n_active must be >= 1");
}

ActiveSampleScore::ActiveSampleScore(ManifoldSpec spec, std::size_t n_active,
                                     std::size_t dataset_size, std::uint64_t seed)
    : spec_(std::move(spec)), n_active_(n_active), dataset_size_(dataset_size), seed_(seed) {}

ActiveSampleScore ActiveSampleScore::with_effective_count(ManifoldSpec spec,
                                                          std::size_t dataset_size,
                                                          std::uint64_t seed) {
  if (dataset_size < 2)
    throw std::invalid_argument("ActiveSampleScore: dataset size must be >= 2");
  return ActiveSampleScore(std::move(spec), 0, dataset_size, seed);
}

std::size_t ActiveSampleScore::active_count(const StateVector& x, double t) const {
  if (n_active_ > 0) return n_active_;
  const double tc = tc_approx(spec_, x, dataset_size_);
  const double n = effective_n(t, tc, dataset_size_);
  return static_cast<std::size_t>(std::max(1.0, std::round(n)));
}

StateVector ActiveSampleScore::evaluate(const StateVector& x, double t) const {
  // Seed from the query bits so repeated calls agree.
  std::uint64_t h = derive_seed(seed_, {std::bit_cast<std::uint64_t>(t)});
  for (double xi : x) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(xi));
  return active_sample_score(spec_, x, t, active_count(x, t), h);
}

FileBackedScore::FileBackedScore(std::vector<Entry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("FileBackedScore: no entries");
  dim_ = static_cast<std::size_t>(entries_.front().x.size());
  for (const Entry& e : entries_)
    if (static_cast<std::size_t>(e.x.size()) != dim_ ||
        static_cast<std::size_t>(e.score.size()) != dim_)
      throw std::invalid_argument("FileBackedScore: inconsistent entry dimensions");
}

StateVector FileBackedScore::evaluate(const StateVector& x, double t) const {
  for (const Entry& e : entries_)
    if (e.t == t && e.x.size() == x.size() && e.x == x) return e.score;
  throw std::out_of_range("FileBackedScore: no stored score at the requested (x, t)");
}

}  // namespace gmem
