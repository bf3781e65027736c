#pragma once

// Linear-manifold Gaussian data: x0 = F z with F diagonal in its own
// eigenbasis, i.e. coordinate i is N(0, sigma_i^2) and sigma_i^2 = 0 on the
// d - m directions orthogonal to the manifold.

#include "gmem/types.hpp"

#include <cstdint>
#include <vector>

namespace gmem {

struct Block {
  std::size_t dim = 0;
  double variance = 0.0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Ambient dimension plus variance blocks.
///
/// Blocks are kept in canonical order (descending variance, stable for
/// ties) and laid out on the leading coordinates; any remaining
/// coordinates have zero variance.
class ManifoldSpec {
 public:
  /// Throws std::invalid_argument when d == 0, a block is empty, a variance
  /// is negative or non-finite, the blocks overflow d, or no variance is > 0.
  ManifoldSpec(std::size_t ambient_dim, std::vector<Block> blocks);

  std::size_t ambient_dim() const noexcept { return ambient_dim_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  /// Number of coordinates with positive variance.
  std::size_t manifold_dim() const noexcept { return manifold_dim_; }
  /// sigma_i^2 for every coordinate i.
  const Vector& variances() const noexcept { return variances_; }

  friend bool operator==(const ManifoldSpec& a, const ManifoldSpec& b) {
    return a.ambient_dim_ == b.ambient_dim_ && a.blocks_ == b.blocks_;
  }

 private:
  std::size_t ambient_dim_;
  std::vector<Block> blocks_;
  std::size_t manifold_dim_ = 0;
  Vector variances_;
};

/// ManifoldSpec from an arbitrary list of per-coordinate variances, e.g. the
/// eigenvalues of F^T F for a random projection. Equal values are merged.
ManifoldSpec spec_from_variances(const Vector& variances);

/// Training set drawn from the linear model.
struct Dataset {
  /// Validates shape, N >= 1 and exact zeros on zero-variance coordinates.
  Dataset(ManifoldSpec spec, RowMatrix points, std::uint64_t seed);

  ManifoldSpec spec;
  RowMatrix points;  // N x d
  std::uint64_t seed;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
};

Dataset sample_dataset(const ManifoldSpec& spec, std::size_t count, std::uint64_t seed);

/// omega^2(x) = d^-1 sum_i x_i^2 sigma_i^2
double variance_density(const ManifoldSpec& spec, const StateVector& x);

struct NormMoments {
  double r2;  // d^-1 sum sigma_i^2
  double r4;  // d^-1 sum sigma_i^4
};

NormMoments norm_moments(const ManifoldSpec& spec);

/// Draws from p(x0 | x; t): independent normals with mean s x / (s + t) and
/// variance t s / (s + t), s = sigma_i^2. Zero-variance coordinates are 0.
std::vector<StateVector> posterior_sample(const ManifoldSpec& spec, const StateVector& x, double t,
                                          std::size_t count, std::uint64_t seed);

namespace detail {
void require_dim(const ManifoldSpec& spec, const StateVector& x, const char* where);
void require_positive_time(double t, const char* where);
}  // namespace detail

}  // namespace gmem
