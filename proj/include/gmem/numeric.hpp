#pragma once

#include "gmem/types.hpp"

#include <cmath>
#include <limits>

namespace gmem {

/// log sum_i exp(v_i), shifted by the maximum.
inline double logsumexp(const Vector& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace gmem
