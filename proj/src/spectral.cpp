#include "gmem/spectral.hpp"

#include "gmem/rem.hpp"
#include "gmem/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gmem {

std::string_view estimator_name(SpectrumEstimator e) {
  switch (e) {
    case SpectrumEstimator::forward:
      return "forward";
    case SpectrumEstimator::central:
      return "central";
    case SpectrumEstimator::analytic:
      return "analytic";
    case SpectrumEstimator::random_matrix:
      return "random_matrix";
  }
  return "unknown";
}

std::string_view probe_mode_name(ProbeMode m) {
  return m == ProbeMode::forward ? "forward" : "central";
}

std::string_view probe_design_name(ProbeDesign p) {
  return p == ProbeDesign::iid ? "iid" : "orthogonal";
}

ProbeMode parse_probe_mode(std::string_view s) {
  if (s == "forward") return ProbeMode::forward;
  if (s == "central") return ProbeMode::central;
  throw std::invalid_argument("unknown probe mode '" + std::string(s) + "'");
}

ProbeDesign parse_probe_design(std::string_view s) {
  if (s == "orthogonal") return ProbeDesign::orthogonal;
  if (s == "iid") return ProbeDesign::iid;
  throw std::invalid_argument("unknown probe design '" + std::string(s) + "'");
}

Matrix probe_directions(std::size_t d, std::size_t K, std::uint64_t seed, ProbeDesign design) {
  if (d == 0 || K == 0) throw std::invalid_argument("probe_directions: d and K must be >= 1");
  Rng rng(seed);
  Matrix G(d, K);
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t i = 0; i < d; ++i) G(i, j) = rng.normal();
  if (design == ProbeDesign::iid) return G;

  const auto n = static_cast<Eigen::Index>(d);
  const auto k = static_cast<Eigen::Index>(K);
  if (K >= d) {
    Eigen::HouseholderQR<Matrix> qr(G.transpose());
    const Matrix Q = qr.householderQ() * Matrix::Identity(k, n);
    return std::sqrt(static_cast<double>(K)) * Q.transpose();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, k);
  return std::sqrt(static_cast<double>(d)) * Q;
}

Matrix score_matrix(const ScoreOracle& oracle, const StateVector& x0, double t, std::size_t K,
                    std::uint64_t seed, ProbeMode mode, ProbeDesign design) {
  detail::require_positive_time(t, "score_matrix");
  if (K < 1) throw std::invalid_argument("score_matrix: K must be >= 1");
  const std::size_t d = oracle.dim();
  if (static_cast<std::size_t>(x0.size()) != d)
    throw std::invalid_argument("score_matrix: x0 dimension does not match the oracle");

  const Matrix P = probe_directions(d, K, seed, design);
  const double h = std::sqrt(t);
  Matrix S(d, K);
  for (std::size_t j = 0; j < K; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const StateVector step = h * P.col(jj);
    if (mode == ProbeMode::forward) {
      S.col(jj) = oracle.evaluate(x0 + step, t);
    } else {
      S.col(jj) = 0.5 * (oracle.evaluate(x0 + step, t) - oracle.evaluate(x0 - step, t));
    }
  }
  return S;
}

SpectrumRecord singular_spectrum(const Matrix& S, double scale, std::string scaling) {
  if (S.size() == 0) throw std::invalid_argument("singular_spectrum: empty matrix");
  if (!S.allFinite()) throw NumericalError("singular_spectrum: matrix has non-finite entries");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("singular_spectrum: scale must be positive");

  Eigen::BDCSVD<Matrix> svd(S);
  if (svd.info() != Eigen::Success) throw NumericalError("singular_spectrum: SVD did not converge");

  SpectrumRecord rec;
  rec.raw = svd.singularValues();  // already descending
  rec.values = rec.raw * scale;
  rec.scale = scale;
  rec.scaling = std::move(scaling);
  rec.K = static_cast<std::size_t>(S.cols());
  rec.rank_deficient = S.cols() < S.rows();
  return rec;
}

SpectrumRecord probe_spectrum(const ScoreOracle& oracle, const StateVector& x0, double t,
                              std::size_t K, std::uint64_t seed, ProbeMode mode,
                              ProbeDesign design) {
  const Matrix S = score_matrix(oracle, x0, t, K, seed, mode, design);
  SpectrumRecord rec =
      singular_spectrum(S, std::sqrt(t / static_cast<double>(K)), "sqrt(t/K)");
  rec.x_star = x0;
  rec.t = t;
  rec.oracle = std::string(oracle_name(oracle.kind()));
  rec.estimator =
      mode == ProbeMode::forward ? SpectrumEstimator::forward : SpectrumEstimator::central;
  return rec;
}

Matrix smoothed_jacobian(const ScoreOracle& oracle, const StateVector& x, double t) {
  detail::require_positive_time(t, "smoothed_jacobian");
  const auto d = static_cast<Eigen::Index>(oracle.dim());
  if (x.size() != d) throw std::invalid_argument("smoothed_jacobian: dimension mismatch");
  const double h = std::sqrt(t);
  const StateVector base = oracle.evaluate(x, t);
  Matrix J(d, d);
  StateVector xp = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    xp(j) = x(j) + h;
    J.col(j) = (oracle.evaluate(xp, t) - base) / h;
    xp(j) = x(j);
  }
  return J;
}

GapProfile gap_profile(const SpectrumRecord& record) {
  const Eigen::Index n = record.values.size();
  if (n < 2) throw std::invalid_argument("gap_profile: spectrum needs at least 2 values");
  GapProfile g;
  g.gaps = record.values.head(n - 1) - record.values.tail(n - 1);
  Eigen::Index at = 0;
  g.gaps.maxCoeff(&at);  // first maximum on ties
  g.argmax = static_cast<std::size_t>(at) + 1;
  return g;
}

double theoretical_gap(double sigma2, double t, double alpha_m) {
  if (!(alpha_m > 0.0) || alpha_m > 1.0)
    throw std::invalid_argument("theoretical_gap: alpha_m must lie in (0, 1]");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("theoretical_gap: sigma2 must be >= 0");
  detail::require_positive_time(t, "theoretical_gap");
  const double f = 1.0 + 1.0 / std::sqrt(alpha_m);
  const double s = sigma2 * f * f;
  return s / (t + s);
}

namespace {

// phi(t, 0) + phi(t, e_i sqrt(t)) for every coordinate i.
Vector phi_pairs(const ManifoldSpec& spec, double t, std::size_t dataset_size,
                 const TcFunction& tc_at) {
  const auto d = static_cast<Eigen::Index>(spec.ambient_dim());
  StateVector x = StateVector::Zero(d);
  const double p0 = phi(t, tc_at(x), dataset_size);
  Vector out(d);
  const double h = std::sqrt(t);
  for (Eigen::Index i = 0; i < d; ++i) {
    x(i) = h;
    out(i) = p0 + phi(t, tc_at(x), dataset_size);
    x(i) = 0.0;
  }
  return out;
}

}  // namespace

Matrix random_matrix_jacobian(const ManifoldSpec& spec, double t, std::size_t dataset_size,
                              const TcFunction& tc_at, std::uint64_t seed,
                              double variance_scale) {
  detail::require_positive_time(t, "random_matrix_jacobian");
  if (!(variance_scale >= 0.0))
    throw std::invalid_argument("random_matrix_jacobian: variance_scale must be >= 0");
  const auto d = static_cast<Eigen::Index>(spec.ambient_dim());
  const Vector& s = spec.variances();
  const Vector pj = phi_pairs(spec, t, dataset_size, tc_at);

  Rng rng(seed);
  Matrix J(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double var = variance_scale * s(i) / (t * (t + s(i))) * pj(j);
      const double mean = i == j ? -1.0 / (t + s(i)) : 0.0;
      J(i, j) = mean + std::sqrt(var) * rng.normal();
    }
  }
  return J;
}

SpectrumRecord jacobian_spectrum(const Matrix& J, double t, SpectrumEstimator estimator) {
  SpectrumRecord rec = singular_spectrum(J, t, "t");
  rec.t = t;
  rec.x_star = StateVector::Zero(J.rows());
  rec.oracle = "theory";
  rec.K = 0;
  rec.rank_deficient = false;
  rec.estimator = estimator;
  return rec;
}

SpectrumRecord predicted_spectrum(const ManifoldSpec& spec, double t, std::size_t dataset_size,
                                  const TcFunction& tc_at) {
  detail::require_positive_time(t, "predicted_spectrum");
  if (dataset_size < 2) throw std::invalid_argument("predicted_spectrum: N must be >= 2");
  const auto s = spec.variances().array();
  const double fluct = (s / (t * t * (t + s).square())).sum();
  const Vector pj = phi_pairs(spec, t, dataset_size, tc_at);

  Vector v = ((t + s).square().inverse() + fluct * pj.array().square()).sqrt().matrix();
  std::sort(v.begin(), v.end(), std::greater<>());

  SpectrumRecord rec;
  rec.raw = v;
  rec.values = v * t;
  rec.scale = t;
  rec.scaling = "t";
  rec.x_star = StateVector::Zero(s.size());
  rec.t = t;
  rec.oracle = "theory";
  rec.K = 0;
  rec.estimator = SpectrumEstimator::analytic;
  return rec;
}

DimensionEstimate detect_dimension(const SpectrumRecord& record, double c, std::size_t discard) {
  const std::size_t n = record.size();
  if (n < discard + 3)
    throw std::invalid_argument("detect_dimension: need at least discard + 3 values");
  if (!(c > 0.0)) throw std::invalid_argument("detect_dimension: c must be positive");

  const Vector& v = record.values;
  DimensionEstimate est;
  est.c = c;
  est.discard = discard;
  est.first_centre = discard + 1;
  const std::size_t m = n - 2 - discard;
  est.trace.resize(static_cast<Eigen::Index>(m));
  for (std::size_t q = 0; q < m; ++q) {
    const auto i = static_cast<Eigen::Index>(est.first_centre + q);
    est.trace(static_cast<Eigen::Index>(q)) = std::abs(v(i - 1) - 2.0 * v(i) + v(i + 1));
  }

  std::vector<double> sorted(est.trace.begin(), est.trace.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double median = *mid;
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), mid);
    median = 0.5 * (median + lower);
  }
  // Round-off floor: an exactly flat block must not register as a jump.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(v(0));
  est.threshold = std::max(c * median, floor);

  for (std::size_t q = 0; q < m; ++q) {
    if (est.trace(static_cast<Eigen::Index>(q)) > est.threshold) {
      est.gap_found = true;
      est.centre = est.first_centre + q;
      // Values above the jump are the stiff directions; the rest span the
      // manifold. With K < d probes the ambient size comes from x_star.
      const std::size_t d = record.x_star.size() > 0 ? static_cast<std::size_t>(record.x_star.size()) : n;
      est.k = d - std::min(d, est.centre + 1);
      return est;
    }
  }
  est.k = 0;
  return est;
}

}  // namespace gmem
