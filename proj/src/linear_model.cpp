#include "gmem/linear_model.hpp"

#include "gmem/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace gmem {

namespace detail {

void require_dim(const ManifoldSpec& spec, const StateVector& x, const char* where) {
  if (static_cast<std::size_t>(x.size()) != spec.ambient_dim())
    throw std::invalid_argument(std::string(where) + ": state has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(spec.ambient_dim()));
}

void require_positive_time(double t, const char* where) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(std::string(where) + ": diffusion time must be positive and finite");
}

}  // namespace detail

ManifoldSpec::ManifoldSpec(std::size_t ambient_dim, std::vector<Block> blocks)
    : ambient_dim_(ambient_dim), blocks_(std::move(blocks)) {
  if (ambient_dim_ == 0) throw std::invalid_argument("ManifoldSpec: ambient dimension must be positive");
  std::size_t total = 0;
  bool any_positive = false;
  for (const Block& b : blocks_) {
    if (b.dim == 0) throw std::invalid_argument("ManifoldSpec: block dimension must be positive");
    if (!std::isfinite(b.variance) || b.variance < 0.0)
      throw std::invalid_argument("ManifoldSpec: block variance must be finite and >= 0");
    total += b.dim;
    any_positive = any_positive || b.variance > 0.0;
  }
  if (total > ambient_dim_)
    throw std::invalid_argument("ManifoldSpec: blocks span " + std::to_string(total) +
                                " dimensions but ambient dimension is " +
                                std::to_string(ambient_dim_));
  if (!any_positive) throw std::invalid_argument("ManifoldSpec: at least one variance must be > 0");

  std::stable_sort(blocks_.begin(), blocks_.end(),
                   [](const Block& a, const Block& b) { return a.variance > b.variance; });

  variances_ = Vector::Zero(static_cast<Eigen::Index>(ambient_dim_));
  Eigen::Index at = 0;
  for (const Block& b : blocks_) {
    variances_.segment(at, static_cast<Eigen::Index>(b.dim)).setConstant(b.variance);
    at += static_cast<Eigen::Index>(b.dim);
    if (b.variance > 0.0) manifold_dim_ += b.dim;
  }
}

ManifoldSpec spec_from_variances(const Vector& variances) {
  std::map<double, std::size_t, std::greater<>> counts;
  for (double v : variances) {
    if (v < 0.0 && v > -1e-12) v = 0.0;  // eigen-solver round-off on PSD input
    ++counts[v];
  }
  std::vector<Block> blocks;
  for (const auto& [v, n] : counts)
    if (v != 0.0) blocks.push_back({n, v});
  return ManifoldSpec(static_cast<std::size_t>(variances.size()), std::move(blocks));
}

Dataset::Dataset(ManifoldSpec spec_, RowMatrix points_, std::uint64_t seed_)
    : spec(std::move(spec_)), points(std::move(points_)), seed(seed_) {
  if (points.rows() < 1) throw std::invalid_argument("Dataset: needs at least one point");
  if (static_cast<std::size_t>(points.cols()) != spec.ambient_dim())
    throw std::invalid_argument("Dataset: point width does not match ambient dimension");
  const Vector& var = spec.variances();
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    if (var[i] != 0.0) continue;
    if ((points.col(i).array() != 0.0).any())
      throw std::invalid_argument("Dataset: nonzero coordinate " + std::to_string(i) +
                                  " in a zero-variance direction");
  }
  if (!points.allFinite()) throw std::invalid_argument("Dataset: non-finite coordinate");
}

Dataset sample_dataset(const ManifoldSpec& spec, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_dataset: N must be >= 1");
  const auto d = static_cast<Eigen::Index>(spec.ambient_dim());
  const Vector stddev = spec.variances().cwiseSqrt();
  RowMatrix points = RowMatrix::Zero(static_cast<Eigen::Index>(count), d);
  Rng rng(seed);
  for (Eigen::Index r = 0; r < points.rows(); ++r)
    for (Eigen::Index i = 0; i < d; ++i)
      if (stddev[i] > 0.0) points(r, i) = stddev[i] * rng.normal();
  return Dataset(spec, std::move(points), seed);
}

double variance_density(const ManifoldSpec& spec, const StateVector& x) {
  detail::require_dim(spec, x, "variance_density");
  return x.cwiseAbs2().dot(spec.variances()) / static_cast<double>(spec.ambient_dim());
}

NormMoments norm_moments(const ManifoldSpec& spec) {
  const Vector& v = spec.variances();
  const double d = static_cast<double>(spec.ambient_dim());
  return {v.sum() / d, v.squaredNorm() / d};
}

std::vector<StateVector> posterior_sample(const ManifoldSpec& spec, const StateVector& x, double t,
                                          std::size_t count, std::uint64_t seed) {
  detail::require_dim(spec, x, "posterior_sample");
  detail::require_positive_time(t, "posterior_sample");
  const Vector& var = spec.variances();
  const auto d = x.size();
  Vector mean(d), stddev(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    mean[i] = var[i] * x[i] / (var[i] + t);
    stddev[i] = std::sqrt(t * var[i] / (var[i] + t));
  }
  Rng rng(seed);
  std::vector<StateVector> draws;
  draws.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    StateVector y = Vector::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i)
      if (var[i] > 0.0) y[i] = mean[i] + stddev[i] * rng.normal();
    draws.push_back(std::move(y));
  }
  return draws;
}

}  // namespace gmem
