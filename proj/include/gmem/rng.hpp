#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gmem {

/// Name recorded in run manifests. Bump the suffix if the draw sequence changes.
inline constexpr const char* kRngAlgorithm = "mt19937_64+box-muller/1";

/// Seeded generator with a platform-independent normal transform.
///
/// std::normal_distribution is implementation-defined, so normals are
/// produced here by Box-Muller on top of the (standard-specified)
/// mt19937_64 stream. Uniforms use the top 53 bits of each output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for a cell of an experiment grid.
///
/// Chains splitmix64 over the master seed and each coordinate, so two cells
/// that differ in any coordinate get unrelated streams and adding cells
/// never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords);

}  // namespace gmem
