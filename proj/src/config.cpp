#include "gmem/config.hpp"

#include "gmem/io.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>
#include <string>

namespace gmem {

using nlohmann::json;

std::string_view harness_estimator_name(HarnessEstimator e) {
  switch (e) {
    case HarnessEstimator::exact:
      return "exact";
    case HarnessEstimator::empirical:
      return "empirical";
    case HarnessEstimator::analytic:
      return "analytic";
    case HarnessEstimator::random_matrix:
      return "random_matrix";
  }
  return "unknown";
}

std::size_t ExperimentConfig::probes() const {
  return K > 0 ? K : std::max<std::size_t>(4 * spec.ambient_dim(), 100);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config." + field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known)
      fail(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
  }
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

std::uint64_t get_uint(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) fail(field, "must be >= 0");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail(field, "must be a nonnegative integer");
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be true or false");
  return v.get<bool>();
}

std::vector<double> get_grid(const json& v, const std::string& field, bool log_default) {
  std::vector<double> grid;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      grid.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
  } else if (v.is_object()) {
    reject_unknown(v, field, {"min", "max", "points", "spacing"});
    if (!v.contains("min") || !v.contains("max") || !v.contains("points"))
      fail(field, "object form needs min, max and points");
    const double lo = get_number(v["min"], field + ".min");
    const double hi = get_number(v["max"], field + ".max");
    const std::uint64_t n = get_uint(v["points"], field + ".points");
    bool log_spaced = log_default;
    if (v.contains("spacing")) {
      const std::string s = get_string(v["spacing"], field + ".spacing");
      if (s == "log")
        log_spaced = true;
      else if (s == "linear")
        log_spaced = false;
      else
        fail(field + ".spacing", "must be \"log\" or \"linear\"");
    }
    if (n < 1) fail(field + ".points", "must be >= 1");
    if (!(lo > 0.0)) fail(field + ".min", "must be > 0");
    if (!(hi >= lo)) fail(field + ".max", "must be >= min");
    if (log_spaced) {
      grid = log_grid(lo, hi, n);
    } else {
      grid.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        grid[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
  } else {
    fail(field, "must be an array or {min, max, points}");
  }
  if (grid.empty()) fail(field, "must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) fail(field, "values must be > 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) fail(field, "must be strictly increasing");
  }
  return grid;
}

ManifoldSpec get_spec(const json& v, const std::string& field) {
  reject_unknown(v, field, {"ambient_dim", "blocks"});
  if (!v.contains("ambient_dim")) fail(field + ".ambient_dim", "required");
  if (!v.contains("blocks")) fail(field + ".blocks", "required");
  const std::uint64_t d = get_uint(v["ambient_dim"], field + ".ambient_dim");
  const json& bs = v["blocks"];
  if (!bs.is_array()) fail(field + ".blocks", "must be an array");
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const std::string bf = field + ".blocks[" + std::to_string(i) + "]";
    reject_unknown(bs[i], bf, {"dim", "variance"});
    if (!bs[i].contains("dim") || !bs[i].contains("variance")) fail(bf, "needs dim and variance");
    blocks.push_back({static_cast<std::size_t>(get_uint(bs[i]["dim"], bf + ".dim")),
                      get_number(bs[i]["variance"], bf + ".variance")});
  }
  try {
    return ManifoldSpec(static_cast<std::size_t>(d), std::move(blocks));
  } catch (const std::invalid_argument& e) {
    fail(field, e.what());
  }
}

json spec_json(const ManifoldSpec& spec) {
  json blocks = json::array();
  for (const Block& b : spec.blocks()) blocks.push_back({{"dim", b.dim}, {"variance", b.variance}});
  return {{"ambient_dim", spec.ambient_dim()}, {"blocks", blocks}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  reject_unknown(j, "",
                 {"spec", "N_list", "t_grid", "repetitions", "estimators", "K", "c", "discard",
                  "master_seed", "tc_method", "fresh_dataset_per_rep", "x_star", "probe_mode",
                  "probe_design"});
  for (const char* req : {"spec", "N_list", "t_grid"})
    if (!j.contains(req)) fail(req, "required");

  ExperimentConfig c;
  c.spec = get_spec(j["spec"], "spec");

  const json& ns = j["N_list"];
  if (!ns.is_array() || ns.empty()) fail("N_list", "must be a nonempty array");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const std::uint64_t n = get_uint(ns[i], "N_list[" + std::to_string(i) + "]");
    if (n < 1) fail("N_list[" + std::to_string(i) + "]", "must be >= 1");
    c.N_list.push_back(static_cast<std::size_t>(n));
  }
  c.t_grid = get_grid(j["t_grid"], "t_grid", true);

  if (j.contains("repetitions")) {
    const std::uint64_t r = get_uint(j["repetitions"], "repetitions");
    if (r < 1 || r > 1000000) fail("repetitions", "must be in [1, 1e6]");
    c.repetitions = static_cast<int>(r);
  }
  if (j.contains("estimators")) {
    const json& es = j["estimators"];
    if (!es.is_array() || es.empty()) fail("estimators", "must be a nonempty array");
    c.estimators.clear();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const std::string f = "estimators[" + std::to_string(i) + "]";
      const std::string s = get_string(es[i], f);
      if (!seen.insert(s).second) fail(f, "duplicate estimator '" + s + "'");
      if (s == "exact")
        c.estimators.push_back(HarnessEstimator::exact);
      else if (s == "empirical")
        c.estimators.push_back(HarnessEstimator::empirical);
      else if (s == "analytic")
        c.estimators.push_back(HarnessEstimator::analytic);
      else if (s == "random_matrix")
        c.estimators.push_back(HarnessEstimator::random_matrix);
      else
        fail(f, "unknown estimator '" + s + "' (exact, empirical, analytic, random_matrix)");
    }
  }
  if (j.contains("K")) {
    const std::uint64_t k = get_uint(j["K"], "K");
    if (k < 1) fail("K", "must be >= 1");
    c.K = static_cast<std::size_t>(k);
  }
  if (j.contains("c")) {
    c.c = get_number(j["c"], "c");
    if (!(c.c > 0.0)) fail("c", "must be > 0");
  }
  if (j.contains("discard")) c.discard = static_cast<std::size_t>(get_uint(j["discard"], "discard"));
  if (c.spec.ambient_dim() < c.discard + 3) fail("discard", "needs ambient_dim >= discard + 3");
  if (j.contains("master_seed")) c.master_seed = get_uint(j["master_seed"], "master_seed");
  if (j.contains("tc_method")) {
    const std::string s = get_string(j["tc_method"], "tc_method");
    if (s == "approx")
      c.tc_method = TcMethod::approx;
    else if (s == "exact")
      c.tc_method = TcMethod::exact;
    else
      fail("tc_method", "must be \"approx\" or \"exact\"");
  }
  if (j.contains("fresh_dataset_per_rep"))
    c.fresh_dataset_per_rep = get_bool(j["fresh_dataset_per_rep"], "fresh_dataset_per_rep");
  if (j.contains("x_star")) {
    const std::string s = get_string(j["x_star"], "x_star");
    if (s == "origin")
      c.x_star = XStarChoice::origin;
    else if (s == "data_point")
      c.x_star = XStarChoice::data_point;
    else
      fail("x_star", "must be \"origin\" or \"data_point\"");
  }
  try {
    if (j.contains("probe_mode")) c.probe_mode = parse_probe_mode(get_string(j["probe_mode"], "probe_mode"));
  } catch (const std::invalid_argument& e) {
    fail("probe_mode", e.what());
  }
  try {
    if (j.contains("probe_design"))
      c.probe_design = parse_probe_design(get_string(j["probe_design"], "probe_design"));
  } catch (const std::invalid_argument& e) {
    fail("probe_design", e.what());
  }

  const bool theory = std::any_of(c.estimators.begin(), c.estimators.end(), [](auto e) {
    return e == HarnessEstimator::analytic || e == HarnessEstimator::random_matrix;
  });
  if (theory)
    for (std::size_t i = 0; i < c.N_list.size(); ++i)
      if (c.N_list[i] < 2)
        fail("N_list[" + std::to_string(i) + "]", "must be >= 2 for analytic/random_matrix");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& c) {
  json est = json::array();
  for (auto e : c.estimators) est.push_back(std::string(harness_estimator_name(e)));
  return {{"spec", spec_json(c.spec)},
          {"N_list", c.N_list},
          {"t_grid", c.t_grid},
          {"repetitions", c.repetitions},
          {"estimators", est},
          {"K", c.probes()},
          {"c", c.c},
          {"discard", c.discard},
          {"master_seed", c.master_seed},
          {"tc_method", c.tc_method == TcMethod::exact ? "exact" : "approx"},
          {"fresh_dataset_per_rep", c.fresh_dataset_per_rep},
          {"x_star", c.x_star == XStarChoice::origin ? "origin" : "data_point"},
          {"probe_mode", std::string(probe_mode_name(c.probe_mode))},
          {"probe_design", std::string(probe_design_name(c.probe_design))}};
}

TcConfig parse_tc_config(const json& j) {
  reject_unknown(j, "",
                 {"mode", "ambient_dim", "latent_dim", "projection_scale", "alpha_grid", "alpha",
                  "positions", "x_scale", "master_seed"});
  TcConfig c;
  if (j.contains("mode")) {
    const std::string s = get_string(j["mode"], "mode");
    if (s == "alpha")
      c.mode = TcConfig::Mode::alpha;
    else if (s == "positions")
      c.mode = TcConfig::Mode::positions;
    else
      fail("mode", "must be \"alpha\" or \"positions\"");
  }
  if (j.contains("ambient_dim")) c.ambient_dim = get_uint(j["ambient_dim"], "ambient_dim");
  if (j.contains("latent_dim")) c.latent_dim = get_uint(j["latent_dim"], "latent_dim");
  if (c.ambient_dim < 1) fail("ambient_dim", "must be >= 1");
  if (c.latent_dim < 1 || c.latent_dim > c.ambient_dim)
    fail("latent_dim", "must be in [1, ambient_dim]");
  if (j.contains("projection_scale")) {
    c.projection_scale = get_number(j["projection_scale"], "projection_scale");
    if (!(c.projection_scale > 0.0)) fail("projection_scale", "must be > 0");
  }
  if (j.contains("alpha_grid"))
    c.alpha_grid = get_grid(j["alpha_grid"], "alpha_grid", false);
  else
    c.alpha_grid = get_grid(json{{"min", 0.01}, {"max", 0.5}, {"points", 50}}, "alpha_grid", false);
  if (j.contains("alpha")) {
    c.alpha = get_number(j["alpha"], "alpha");
    if (!(c.alpha > 0.0)) fail("alpha", "must be > 0");
  }
  if (j.contains("positions")) {
    c.positions = get_uint(j["positions"], "positions");
    if (c.positions < 1) fail("positions", "must be >= 1");
  }
  if (j.contains("x_scale")) {
    c.x_scale = get_number(j["x_scale"], "x_scale");
    if (!(c.x_scale >= 0.0)) fail("x_scale", "must be >= 0");
  }
  if (j.contains("master_seed")) c.master_seed = get_uint(j["master_seed"], "master_seed");
  return c;
}

TcConfig load_tc_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_tc_config(j);
}

json to_json(const TcConfig& c) {
  return {{"mode", c.mode == TcConfig::Mode::alpha ? "alpha" : "positions"},
          {"ambient_dim", c.ambient_dim},
          {"latent_dim", c.latent_dim},
          {"projection_scale", c.projection_scale},
          {"alpha_grid", c.alpha_grid},
          {"alpha", c.alpha},
          {"positions", c.positions},
          {"x_scale", c.x_scale},
          {"master_seed", c.master_seed}};
}

}  // namespace gmem
