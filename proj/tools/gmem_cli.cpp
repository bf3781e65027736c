// gmem: command-line front end for the experiment harness.
//
//   gmem generate --config cfg.json --out dir
//   gmem spectra  --config cfg.json --out dir [--seed S] [--threads n]
//   gmem tc       --config tc.json  --out dir
//   gmem dims     --config cfg.json --out dir
//   gmem analyze  samples.txt --out dir [--c 10] [--discard 1]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.

#include "gmem/config.hpp"
#include "gmem/experiments.hpp"
#include "gmem/types.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  unsigned worker_count() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "JSON configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "output directory")->required();
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads (default: all cores)");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

gmem::ExperimentConfig experiment_config(const Common& c) {
  gmem::ExperimentConfig cfg = gmem::load_experiment_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  return cfg;
}

int run_generate(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = experiment_config(c);
  gmem::ManifestInfo info{"generate", gmem::to_json(cfg), cfg.master_seed, 1, {}, {}, 0.0};
  info.files = gmem::write_datasets(c.out, cfg);
  for (std::size_t ni = 0; ni < cfg.N_list.size(); ++ni)
    info.seeds.push_back({"dataset/N=" + std::to_string(cfg.N_list[ni]) + "/rep=0",
                          gmem::dataset_seed(cfg.master_seed, ni, 0)});
  info.wall_clock_seconds = seconds_since(start);
  gmem::write_manifest(c.out, info);
  return 0;
}

int run_spectra(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = experiment_config(c);
  const unsigned threads = c.worker_count();
  const auto result = gmem::run_spectra_vs_time(cfg, threads);
  gmem::ManifestInfo info{"spectra", gmem::to_json(cfg), cfg.master_seed, threads,
                          result.seeds, {}, 0.0};
  info.files = gmem::write_spectra(c.out, cfg, result);
  info.wall_clock_seconds = seconds_since(start);
  gmem::write_manifest(c.out, info);
  return 0;
}

int run_dims(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = experiment_config(c);
  const unsigned threads = c.worker_count();
  const auto result = gmem::run_dimension_sweep(cfg, threads);
  gmem::ManifestInfo info{"dims", gmem::to_json(cfg), cfg.master_seed, threads,
                          result.seeds, {}, 0.0};
  info.files = gmem::write_dimension_sweep(c.out, result);
  info.wall_clock_seconds = seconds_since(start);
  gmem::write_manifest(c.out, info);
  for (const auto& r : result.rows)
    std::printf("%s N=%zu t=%.4g k_mean=%.3f no_gap_rate=%.3f\n",
                std::string(gmem::harness_estimator_name(r.estimator)).c_str(), r.N, r.t,
                r.k_mean, r.no_gap_rate);
  return 0;
}

int run_tc(const Common& c) {
  const auto start = std::chrono::steady_clock::now();
  gmem::TcConfig cfg = c.config.empty() ? gmem::parse_tc_config(nlohmann::json::object())
                                         : gmem::load_tc_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  const unsigned threads = c.worker_count();
  const auto result = gmem::run_tc_comparison(cfg, threads);
  gmem::ManifestInfo info{"tc", gmem::to_json(cfg), cfg.master_seed, threads, {}, {}, 0.0};
  info.files = gmem::write_tc(c.out, result);
  info.wall_clock_seconds = seconds_since(start);
  gmem::write_manifest(c.out, info);
  std::cout << result.summary.dump() << "\n";
  return 0;
}

int run_analyze(const Common& c, const std::string& file, double cval, std::size_t discard) {
  const auto start = std::chrono::steady_clock::now();
  const auto a = gmem::analyze_score_file(file, cval, discard);
  gmem::ManifestInfo info{"analyze",
                          {{"input", file}, {"c", cval}, {"discard", discard}},
                          0,
                          1,
                          {},
                          {},
                          0.0};
  info.files = gmem::write_analysis(c.out, a);
  info.wall_clock_seconds = seconds_since(start);
  gmem::write_manifest(c.out, info);
  std::printf("k=%zu gap_found=%d length=%zu%s\n", a.dimension.k, a.dimension.gap_found ? 1 : 0,
              a.spectrum.size(), a.spectrum.rank_deficient ? " rank-deficient probe set" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric memorization laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GMEM_VERSION);

  Common common;
  auto* generate = app.add_subcommand("generate", "sample datasets from the linear model");
  add_common(generate, common, true);
  auto* spectra = app.add_subcommand("spectra", "score-Jacobian spectra versus time");
  add_common(spectra, common, true);
  auto* tc = app.add_subcommand("tc", "exact versus approximate condensation time");
  add_common(tc, common, false);
  auto* dims = app.add_subcommand("dims", "intrinsic-dimension detection sweep");
  add_common(dims, common, true);
  auto* analyze = app.add_subcommand("analyze", "spectrum and dimension of a score-sample file");
  add_common(analyze, common, false);
  std::string sample_file;
  double cval = 10.0;
  std::size_t discard = 1;
  analyze->add_option("file", sample_file, "score-sample file")->required();
  analyze->add_option("--c", cval, "threshold multiple of the median");
  analyze->add_option("--discard", discard, "leading singular values to skip");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) return run_generate(common);
    if (*spectra) return run_spectra(common);
    if (*tc) return run_tc(common);
    if (*dims) return run_dims(common);
    if (*analyze) {
      if (!common.config.empty()) {
        const auto j = gmem::read_json(common.config);
        for (const auto& item : j.items()) {
          if (item.key() == "c")
            cval = item.value().get<double>();
          else if (item.key() == "discard")
            discard = item.value().get<std::size_t>();
          else
            throw gmem::ConfigError("config." + item.key() + ": unknown key");
        }
      }
      return run_analyze(common, sample_file, cval, discard);
    }
  } catch (const gmem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gmem::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const gmem::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
