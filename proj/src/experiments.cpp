#include "gmem/experiments.hpp"

#include "gmem/kernels.hpp"
#include "gmem/rng.hpp"
#include "gmem/score.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#ifndef GMEM_VERSION
#define GMEM_VERSION "unknown"
#endif

namespace gmem {

namespace {

// Stream tags keep dataset, probe, projection and position streams apart.
constexpr std::uint64_t kTagDataset = 0x6461746173657431ULL;
constexpr std::uint64_t kTagProjection = 0x70726f6a65637431ULL;
constexpr std::uint64_t kTagPosition = 0x706f736974696f6eULL;

constexpr int kTableDigits = 9;

std::string cell_name(HarnessEstimator e, std::size_t N, std::size_t t_index, int rep) {
  return std::string(harness_estimator_name(e)) + "/N=" + std::to_string(N) +
         "/t_index=" + std::to_string(t_index) + "/rep=" + std::to_string(rep);
}

}  // namespace

std::uint64_t dataset_seed(std::uint64_t master, std::size_t n_index, int rep) {
  return derive_seed(master, {kTagDataset, n_index, static_cast<std::uint64_t>(rep)});
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t n_index, std::size_t t_index, int rep,
                        HarnessEstimator estimator) {
  return derive_seed(master, {n_index, t_index, static_cast<std::uint64_t>(rep),
                              static_cast<std::uint64_t>(estimator) + 1});
}

TcFunction make_tc_function(const ManifoldSpec& spec, std::size_t dataset_size, TcMethod method) {
  if (dataset_size < 2) throw std::invalid_argument("tc needs N >= 2");
  if (method == TcMethod::approx)
    return [spec, dataset_size](const StateVector& x) { return tc_approx(spec, x, dataset_size); };
  const double alpha =
      std::log(static_cast<double>(dataset_size)) / static_cast<double>(spec.ambient_dim());
  return [spec, alpha](const StateVector& x) { return tc_exact(spec, x, alpha).t; };
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true);
      }
    }
  };
  const unsigned n = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------

const MeanSpectrum& SpectraResult::mean(HarnessEstimator e, std::size_t n_index,
                                        std::size_t t_index) const {
  for (const MeanSpectrum& m : means)
    if (m.estimator == e && m.n_index == n_index && m.t_index == t_index) return m;
  throw std::out_of_range("SpectraResult::mean: no such cell");
}

SpectraResult run_spectra_vs_time(const ExperimentConfig& config, unsigned threads) {
  const ManifoldSpec& spec = config.spec;
  const std::size_t nN = config.N_list.size();
  const std::size_t nT = config.t_grid.size();
  const int reps = config.repetitions;
  const std::size_t K = config.probes();
  SpectraResult result;

  // Datasets are shared by every t (and, unless fresh per rep, every rep).
  const bool need_data =
      config.x_star == XStarChoice::data_point ||
      std::find(config.estimators.begin(), config.estimators.end(), HarnessEstimator::empirical) !=
          config.estimators.end();
  const int data_reps = config.fresh_dataset_per_rep ? reps : 1;
  std::vector<std::shared_ptr<const Dataset>> datasets;
  if (need_data) {
    datasets.resize(nN * static_cast<std::size_t>(data_reps));
    parallel_for(datasets.size(), threads, [&](std::size_t i) {
      const std::size_t ni = i / static_cast<std::size_t>(data_reps);
      const int r = static_cast<int>(i % static_cast<std::size_t>(data_reps));
      datasets[i] = std::make_shared<const Dataset>(
          sample_dataset(spec, config.N_list[ni], dataset_seed(config.master_seed, ni, r)));
    });
    for (std::size_t i = 0; i < datasets.size(); ++i) {
      const std::size_t ni = i / static_cast<std::size_t>(data_reps);
      const int r = static_cast<int>(i % static_cast<std::size_t>(data_reps));
      result.seeds.push_back({"dataset/N=" + std::to_string(config.N_list[ni]) +
                                  "/rep=" + std::to_string(r),
                              datasets[i]->seed});
    }
  }
  auto dataset_for = [&](std::size_t ni, int rep) -> std::shared_ptr<const Dataset> {
    return datasets[ni * static_cast<std::size_t>(data_reps) +
                    static_cast<std::size_t>(config.fresh_dataset_per_rep ? rep : 0)];
  };

  std::vector<TcFunction> tc_at;
  for (std::size_t ni = 0; ni < nN; ++ni)
    tc_at.push_back(config.N_list[ni] >= 2
                        ? make_tc_function(spec, config.N_list[ni], config.tc_method)
                        : TcFunction{});

  for (HarnessEstimator e : config.estimators)
    for (std::size_t ni = 0; ni < nN; ++ni)
      for (std::size_t ti = 0; ti < nT; ++ti)
        for (int r = 0; r < reps; ++r)
          result.cells.push_back(
              {e, ni, ti, r, cell_seed(config.master_seed, ni, ti, r, e), SpectrumRecord{}});

  const ExactScore exact(spec);
  parallel_for(result.cells.size(), threads, [&](std::size_t i) {
    SpectrumCell& cell = result.cells[i];
    const double t = config.t_grid[cell.t_index];
    const std::size_t N = config.N_list[cell.n_index];
    StateVector x = StateVector::Zero(static_cast<Eigen::Index>(spec.ambient_dim()));
    if (config.x_star == XStarChoice::data_point)
      x = dataset_for(cell.n_index, cell.rep)->points.row(0).transpose();
    switch (cell.estimator) {
      case HarnessEstimator::exact:
        cell.record =
            probe_spectrum(exact, x, t, K, cell.seed, config.probe_mode, config.probe_design);
        break;
      case HarnessEstimator::empirical: {
        const EmpiricalScore oracle(dataset_for(cell.n_index, cell.rep));
        cell.record =
            probe_spectrum(oracle, x, t, K, cell.seed, config.probe_mode, config.probe_design);
        break;
      }
      case HarnessEstimator::analytic:
        cell.record = predicted_spectrum(spec, t, N, tc_at[cell.n_index]);
        break;
      case HarnessEstimator::random_matrix:
        cell.record = jacobian_spectrum(
            random_matrix_jacobian(spec, t, N, tc_at[cell.n_index], cell.seed), t,
            SpectrumEstimator::random_matrix);
        break;
    }
  });

  for (const SpectrumCell& c : result.cells)
    result.seeds.push_back({cell_name(c.estimator, config.N_list[c.n_index], c.t_index, c.rep),
                            c.seed});

  // Index-wise averages over repetitions; cells of one group are contiguous.
  for (std::size_t start = 0; start < result.cells.size(); start += static_cast<std::size_t>(reps)) {
    const SpectrumCell& first = result.cells[start];
    MeanSpectrum m{first.estimator, first.n_index, first.t_index,
                   Vector::Zero(first.record.raw.size()), Vector::Zero(first.record.values.size())};
    for (int r = 0; r < reps; ++r) {
      const SpectrumRecord& rec = result.cells[start + static_cast<std::size_t>(r)].record;
      m.raw += rec.raw;
      m.scaled += rec.values;
    }
    m.raw /= static_cast<double>(reps);
    m.scaled /= static_cast<double>(reps);
    result.means.push_back(std::move(m));
  }
  return result;
}

std::vector<std::string> write_spectra(const std::filesystem::path& dir,
                                       const ExperimentConfig& config,
                                       const SpectraResult& result) {
  std::vector<std::string> files;
  for (HarnessEstimator e : config.estimators) {
    const std::string name(harness_estimator_name(e));
    std::vector<SpectrumRow> rows;
    for (const SpectrumCell& c : result.cells) {
      if (c.estimator != e) continue;
      for (Eigen::Index k = 0; k < c.record.values.size(); ++k)
        rows.push_back({name, config.N_list[c.n_index], config.t_grid[c.t_index], c.rep,
                        static_cast<std::size_t>(k) + 1, c.record.raw(k), c.record.values(k)});
    }
    for (const MeanSpectrum& m : result.means) {
      if (m.estimator != e) continue;
      for (Eigen::Index k = 0; k < m.scaled.size(); ++k)
        rows.push_back({name, config.N_list[m.n_index], config.t_grid[m.t_index], -1,
                        static_cast<std::size_t>(k) + 1, m.raw(k), m.scaled(k)});
    }
    const std::string file = "spectra_" + name + ".csv";
    write_spectrum_rows(dir / file, rows);
    files.push_back(file);
  }
  return files;
}

// ---------------------------------------------------------------------------

DimensionSweepResult run_dimension_sweep(const ExperimentConfig& config, unsigned threads) {
  const SpectraResult spectra = run_spectra_vs_time(config, threads);
  DimensionSweepResult out;
  out.seeds = spectra.seeds;
  const auto reps = static_cast<std::size_t>(config.repetitions);
  for (std::size_t start = 0; start < spectra.cells.size(); start += reps) {
    const SpectrumCell& first = spectra.cells[start];
    DimensionRow row{first.estimator, config.N_list[first.n_index],
                     config.t_grid[first.t_index], {}, {}, 0.0, 0.0};
    for (std::size_t r = 0; r < reps; ++r) {
      const DimensionEstimate est =
          detect_dimension(spectra.cells[start + r].record, config.c, config.discard);
      row.k.push_back(est.k);
      row.gap_found.push_back(est.gap_found);
      row.k_mean += static_cast<double>(est.k);
      if (!est.gap_found) row.no_gap_rate += 1.0;
    }
    row.k_mean /= static_cast<double>(reps);
    row.no_gap_rate /= static_cast<double>(reps);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> write_dimension_sweep(const std::filesystem::path& dir,
                                               const DimensionSweepResult& result) {
  std::ostringstream agg, per;
  agg << "estimator,N,t,reps,k_mean,no_gap_rate\n";
  per << "estimator,N,t,rep,k,gap_found\n";
  for (const DimensionRow& r : result.rows) {
    const std::string name(harness_estimator_name(r.estimator));
    const std::string t = format_double(r.t, kTableDigits);
    agg << name << ',' << r.N << ',' << t << ',' << r.k.size() << ','
        << format_double(r.k_mean, kTableDigits) << ',' << format_double(r.no_gap_rate, kTableDigits)
        << '\n';
    for (std::size_t i = 0; i < r.k.size(); ++i)
      per << name << ',' << r.N << ',' << t << ',' << i << ',' << r.k[i] << ','
          << (r.gap_found[i] ? 1 : 0) << '\n';
  }
  write_text(dir / "dims.csv", agg.str());
  write_text(dir / "dims_reps.csv", per.str());
  return {"dims.csv", "dims_reps.csv"};
}

// ---------------------------------------------------------------------------

ManifoldSpec projection_spec(std::size_t ambient_dim, std::size_t latent_dim, double scale,
                             std::uint64_t seed) {
  if (latent_dim < 1 || latent_dim > ambient_dim)
    throw std::invalid_argument("projection_spec: need 1 <= m <= d");
  Rng rng(seed);
  Matrix F(ambient_dim, latent_dim);
  for (Eigen::Index j = 0; j < F.cols(); ++j)
    for (Eigen::Index i = 0; i < F.rows(); ++i) F(i, j) = scale * rng.normal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(F.transpose() * F, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("projection_spec: eigensolver failed");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(ambient_dim));
  v.head(static_cast<Eigen::Index>(latent_dim)) = eig.eigenvalues().cwiseMax(0.0);
  return spec_from_variances(v);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two equal-length samples of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t q = i; q <= j; ++q) r[idx[q]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

namespace {

TcRow solve_row(const ManifoldSpec& spec, const StateVector& x, double alpha, std::size_t id) {
  TcRow row{id, alpha, variance_density(spec, x), std::numeric_limits<double>::quiet_NaN(),
            tc_approx_at_alpha(spec, x, alpha), "ok", 0, std::numeric_limits<double>::quiet_NaN(),
            false};
  try {
    const CondensationRoot root = tc_exact(spec, x, alpha);
    row.tc_exact = root.t;
    row.iterations = root.iterations;
    row.residual = root.residual;
    row.multiple_roots = root.multiple_roots;
    if (!root.converged) row.status = "not_converged";
  } catch (const NumericalError&) {
    row.status = "no_root";
  }
  return row;
}

StateVector random_position(std::size_t d, double scale, std::uint64_t seed) {
  Rng rng(seed);
  StateVector x(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = scale * rng.normal();
  return x;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

TcResult run_tc_comparison(const TcConfig& config, unsigned threads) {
  TcResult out;
  out.spec = projection_spec(config.ambient_dim, config.latent_dim, config.projection_scale,
                             derive_seed(config.master_seed, {kTagProjection}));
  const ManifoldSpec& spec = out.spec;

  if (config.mode == TcConfig::Mode::alpha) {
    const StateVector x = random_position(config.ambient_dim, config.x_scale,
                                          derive_seed(config.master_seed, {kTagPosition, 0}));
    out.rows.resize(config.alpha_grid.size());
    parallel_for(out.rows.size(), threads,
                 [&](std::size_t i) { out.rows[i] = solve_row(spec, x, config.alpha_grid[i], i); });
    std::vector<double> ex, ap;
    double worst = 0.0;
    bool all_ok = true;
    for (const TcRow& r : out.rows) {
      ap.push_back(r.tc_approx);
      if (r.status != "ok") {
        all_ok = false;
        continue;
      }
      ex.push_back(r.tc_exact);
      worst = std::max(worst, std::abs(r.tc_exact - r.tc_approx) / r.tc_exact);
    }
    out.summary = {{"mode", "alpha"},
                   {"roots_found", ex.size()},
                   {"all_roots_found", all_ok},
                   {"monotone_decreasing_exact", strictly_decreasing(ex)},
                   {"monotone_decreasing_approx", strictly_decreasing(ap)},
                   {"max_relative_difference", worst}};
  } else {
    out.rows.resize(config.positions);
    parallel_for(out.rows.size(), threads, [&](std::size_t i) {
      const StateVector x = random_position(config.ambient_dim, config.x_scale,
                                            derive_seed(config.master_seed, {kTagPosition, i}));
      out.rows[i] = solve_row(spec, x, config.alpha, i);
    });
    std::vector<double> w, ex;
    for (const TcRow& r : out.rows)
      if (r.status == "ok") {
        w.push_back(r.omega2);
        ex.push_back(r.tc_exact);
      }
    out.summary = {{"mode", "positions"},
                   {"roots_found", ex.size()},
                   {"roots_missing", out.rows.size() - ex.size()}};
    if (ex.size() >= 2) out.summary["spearman_omega2_tc_exact"] = spearman(w, ex);
  }
  return out;
}

std::vector<std::string> write_tc(const std::filesystem::path& dir, const TcResult& result) {
  std::ostringstream os;
  os << "id,alpha,omega2,tc_exact,tc_approx,status,iterations,residual,multiple_roots\n";
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v, kTableDigits); };
  for (const TcRow& r : result.rows)
    os << r.id << ',' << num(r.alpha) << ',' << num(r.omega2) << ',' << num(r.tc_exact) << ','
       << num(r.tc_approx) << ',' << r.status << ',' << r.iterations << ',' << num(r.residual)
       << ',' << (r.multiple_roots ? 1 : 0) << '\n';
  write_text(dir / "tc.csv", os.str());

  nlohmann::json summary = result.summary;
  std::vector<double> variances(result.spec.variances().begin(), result.spec.variances().end());
  summary["spec_variances"] = variances;
  write_json(dir / "tc_summary.json", summary);
  return {"tc.csv", "tc_summary.json"};
}

// ---------------------------------------------------------------------------

ScoreFileAnalysis analyze_score_file(const std::filesystem::path& path, double c,
                                     std::size_t discard) {
  ScoreFileAnalysis a;
  a.file = read_score_file(path);
  const Matrix S = a.file.scores.transpose();  // d x K
  a.spectrum = singular_spectrum(S, std::sqrt(a.file.t / static_cast<double>(a.file.K)),
                                 "sqrt(t/K)");
  a.spectrum.x_star =
      a.file.x0 ? *a.file.x0 : StateVector::Zero(static_cast<Eigen::Index>(a.file.d));
  a.spectrum.t = a.file.t;
  a.spectrum.oracle = std::string(oracle_name(OracleKind::file_backed));
  a.spectrum.estimator = SpectrumEstimator::forward;
  a.gaps = gap_profile(a.spectrum);
  a.dimension = detect_dimension(a.spectrum, c, discard);
  return a;
}

std::vector<std::string> write_analysis(const std::filesystem::path& dir,
                                        const ScoreFileAnalysis& a) {
  write_spectrum_records(dir / "spectrum.csv", {a.spectrum});
  const DimensionEstimate& d = a.dimension;
  std::vector<double> trace(d.trace.begin(), d.trace.end());
  std::vector<double> gaps(a.gaps.gaps.begin(), a.gaps.gaps.end());
  nlohmann::json j = {{"d", a.file.d},
                      {"K", a.file.K},
                      {"t", a.file.t},
                      {"k", d.k},
                      {"gap_found", d.gap_found},
                      {"c", d.c},
                      {"discard", d.discard},
                      {"threshold", d.threshold},
                      {"trace_first_index", d.first_centre},
                      {"trace", trace},
                      {"largest_gap_after", a.gaps.argmax},
                      {"gaps", gaps},
                      {"rank_deficient", a.spectrum.rank_deficient}};
  if (a.spectrum.rank_deficient) j["warning"] = "rank-deficient probe set: K < d";
  write_json(dir / "dimension.json", j);
  return {"spectrum.csv", "spectrum.csv.json", "dimension.json"};
}

// ---------------------------------------------------------------------------

std::vector<std::string> write_datasets(const std::filesystem::path& dir,
                                        const ExperimentConfig& config) {
  std::vector<std::string> files;
  for (std::size_t ni = 0; ni < config.N_list.size(); ++ni) {
    const Dataset data =
        sample_dataset(config.spec, config.N_list[ni], dataset_seed(config.master_seed, ni, 0));
    const std::string file = "dataset_N" + std::to_string(config.N_list[ni]) + ".csv";
    write_dataset_csv(dir / file, data);
    files.push_back(file);
  }
  return files;
}

nlohmann::json make_manifest(const ManifestInfo& info) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const CellSeed& s : info.seeds) seeds.push_back({{"cell", s.cell}, {"seed", s.seed}});
  return {{"tool", "gmem"},
          {"version", GMEM_VERSION},
          {"command", info.command},
          {"rng", kRngAlgorithm},
          {"isa", std::string(kernels::active().name)},
          {"master_seed", info.master_seed},
          {"threads", info.threads},
          {"config", info.config},
          {"cell_seeds", seeds},
          {"wall_clock_seconds", info.wall_clock_seconds},
          {"files", info.files}};
}

void write_manifest(const std::filesystem::path& dir, const ManifestInfo& info) {
  write_json(dir / "manifest.json", make_manifest(info));
}

}  // namespace gmem
