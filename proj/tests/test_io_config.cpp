#include "doctest.h"

#include "gmem/config.hpp"
#include "gmem/experiments.hpp"
#include "gmem/io.hpp"
#include "gmem/score.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace gmem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gmem_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json base_config() {
  return json::parse(R"({
    "spec": {"ambient_dim": 30, "blocks": [{"dim": 2, "variance": 1.0}, {"dim": 5, "variance": 0.3}]},
    "N_list": [1000],
    "t_grid": {"min": 0.001, "max": 10, "points": 30}
  })");
}

template <class E>
std::size_t line_of(const fs::path& p) {
  try {
    read_score_file(p);
  } catch (const E& e) {
    return e.line();
  }
  return 0;
}

std::string config_message(const json& j) {
  try {
    parse_experiment_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("number formatting") {
  CHECK(format_double(0.0, 9) == "0");
  CHECK(format_double(-0.0, 9) == "0");
  CHECK(format_double(0.1, 9) == "0.1");
  CHECK(format_double(1.0 / 3.0, 9) == "0.333333333");
  CHECK(std::stod(format_double(M_PI, 17)) == M_PI);
}

TEST_CASE("dataset round trip") {
  const ManifoldSpec s(6, {{2, 1.0}, {1, 0.1}});
  const Dataset d = sample_dataset(s, 50, 12345);
  const fs::path p = scratch("data.csv");
  write_dataset_csv(p, d);
  const DatasetFile f = read_dataset_csv(p);
  CHECK(f.d == 6u);
  CHECK(f.N == 50u);
  CHECK(f.seed == 12345u);
  CHECK(f.points == d.points);
  const Dataset back = load_dataset(p, s);
  CHECK(back.points == d.points);
  CHECK(back.seed == 12345u);

  const fs::path bare = scratch("bare.csv");
  put(bare, "1,2\n3,4\n");
  const DatasetFile b = read_dataset_csv(bare);
  CHECK_FALSE(b.d.has_value());
  CHECK(b.points.rows() == 2);
  CHECK(b.points(1, 0) == 3.0);

  CHECK_THROWS_AS(load_dataset(p, ManifoldSpec(7, {{2, 1.0}})), ParseError);
  const fs::path ragged = scratch("ragged.csv");
  put(ragged, "1,2\n3\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), ShapeError);
  CHECK_THROWS_AS(read_dataset_csv(scratch("missing.csv")), IoError);
}

TEST_CASE("score file round trip") {
  ScoreSampleFile f;
  f.d = 4;
  f.K = 3;
  f.t = 0.125;
  f.x0 = Vector::LinSpaced(4, -1.0, 0.5);
  f.scores = Matrix::Random(3, 4);
  const fs::path p = scratch("scores.txt");
  write_score_file(p, f);
  const auto g = read_score_file(p);
  CHECK(g.d == 4);
  CHECK(g.K == 3);
  CHECK(g.t == 0.125);
  REQUIRE(g.x0.has_value());
  CHECK(*g.x0 == *f.x0);
  CHECK(g.scores == f.scores);

  put(p, "# d=2 K=2 t=0.5\n1,2\n3,4\n");
  const auto h = read_score_file(p);
  CHECK_FALSE(h.x0.has_value());
  CHECK(h.scores(1, 1) == 4.0);
}

TEST_CASE("score file errors are distinct and carry the line") {
  const fs::path p = scratch("broken.txt");

  put(p, "d=2 K=2 t=0.5\n1,2\n3,4\n");
  CHECK(line_of<HeaderError>(p) == 1);
  put(p, "# d=2 K=2\n1,2\n3,4\n");
  CHECK(line_of<HeaderError>(p) == 1);
  put(p, "# d=2 K=2 t=0.5 color=red\n1,2\n3,4\n");
  CHECK(line_of<HeaderError>(p) == 1);
  put(p, "# d=2 K=2 t=abc\n1,2\n3,4\n");
  CHECK(line_of<HeaderError>(p) == 1);

  put(p, "# d=2 K=3 t=0.5\n1,2\n3,4\n");
  CHECK(line_of<ShapeError>(p) == 4);
  put(p, "# d=2 K=2 t=0.5\n1,2\n3,4,5\n");
  CHECK(line_of<ShapeError>(p) == 3);
  put(p, "# d=2 K=1 t=0.5\n1,2\n3,4\n");
  CHECK(line_of<ShapeError>(p) == 3);

  put(p, "# d=2 K=2 t=0.5\n1,nan\n3,4\n");
  CHECK(line_of<NonFiniteError>(p) == 2);
  put(p, "# d=2 K=2 t=0.5\n1,2\ninf,4\n");
  CHECK(line_of<NonFiniteError>(p) == 3);

  put(p, "# d=2 K=2 t=0.5\n1,2\n3,x\n");
  try {
    read_score_file(p);
    FAIL("no error");
  } catch (const HeaderError&) {
    FAIL("wrong kind");
  } catch (const ShapeError&) {
    FAIL("wrong kind");
  } catch (const NonFiniteError&) {
    FAIL("wrong kind");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("spectrum tables") {
  const fs::path p = scratch("rows.csv");
  write_spectrum_rows(p, {{"exact", 1000, 0.01, 0, 1, 2.5, 0.25}, {"exact", 1000, 0.01, -1, 1, 2.5, 0.25}});
  const std::string text = slurp(p);
  CHECK(text.rfind("estimator,N,t,rep,index,value_raw,value_scaled\n", 0) == 0);
  CHECK(text.find("exact,1000,0.01,0,1,2.5,0.25\n") != std::string::npos);
  CHECK(text.find("exact,1000,0.01,mean,1,2.5,0.25\n") != std::string::npos);

  SpectrumRecord r = singular_spectrum(Matrix::Identity(3, 3) * 2.0, 0.5, "half");
  r.t = 0.3;
  r.oracle = "exact";
  r.x_star = Vector::Zero(3);
  const fs::path q = scratch("records.csv");
  write_spectrum_records(q, {r});
  const std::string rec = slurp(q);
  CHECK(rec.rfind("x_id,t,estimator,index,value\n", 0) == 0);
  CHECK(rec.find("0,0.3,central,1,1\n") != std::string::npos);
  const json side = read_json(q.string() + ".json");
  REQUIRE(side["records"].size() == 1);
  CHECK(side["records"][0]["scale"] == 0.5);
  CHECK(side["records"][0]["oracle"] == "exact");
}

TEST_CASE("experiment config parsing") {
  const auto c = parse_experiment_config(base_config());
  CHECK(c.spec.ambient_dim() == 30);
  CHECK(c.spec.manifold_dim() == 7);
  CHECK(c.t_grid.size() == 30);
  CHECK(c.t_grid.front() == 0.001);
  CHECK(c.t_grid.back() == 10.0);
  CHECK(c.probes() == 120);
  CHECK(c.repetitions == 1);
  CHECK(c.estimators.size() == 4);

  json small = base_config();
  small["spec"]["ambient_dim"] = 10;
  small["spec"]["blocks"] = json::array({{{"dim", 3}, {"variance", 1.0}}});
  CHECK(parse_experiment_config(small).probes() == 100);

  const auto back = parse_experiment_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.spec == c.spec);
  CHECK(back.t_grid == c.t_grid);
}

TEST_CASE("config errors name the field") {
  json j = base_config();
  j["colour"] = "blue";
  CHECK(config_message(j).find("config.colour") != std::string::npos);

  j = base_config();
  j["spec"]["blocks"][1]["varience"] = 1;
  CHECK(config_message(j).find("config.spec.blocks[1].varience") != std::string::npos);

  j = base_config();
  j.erase("N_list");
  CHECK(config_message(j).find("config.N_list") != std::string::npos);

  j = base_config();
  j["t_grid"] = json::array({0.1, 0.1, 0.2});
  CHECK(config_message(j).find("config.t_grid") != std::string::npos);

  j = base_config();
  j["t_grid"] = json::array({-1.0, 0.2});
  CHECK(config_message(j).find("config.t_grid") != std::string::npos);

  j = base_config();
  j["repetitions"] = 0;
  CHECK(config_message(j).find("config.repetitions") != std::string::npos);

  j = base_config();
  j["estimators"] = json::array({"exact", "magic"});
  CHECK(config_message(j).find("config.estimators") != std::string::npos);

  j = base_config();
  j["N_list"] = json::array({1});
  CHECK(config_message(j).find("config.N_list") != std::string::npos);

  j = base_config();
  j["tc_method"] = "guess";
  CHECK(config_message(j).find("config.tc_method") != std::string::npos);

  j = base_config();
  j["K"] = "many";
  CHECK(config_message(j).find("config.K") != std::string::npos);

  j = base_config();
  j["spec"]["blocks"][0]["dim"] = 40;
  CHECK(config_message(j).find("config.spec") != std::string::npos);

  j = base_config();
  j["probe_design"] = "sobol";
  CHECK(config_message(j).find("config.probe_design") != std::string::npos);

  const fs::path bad = scratch("bad.json");
  put(bad, "{ not json");
  CHECK_THROWS_AS(load_experiment_config(bad), ConfigError);
}

TEST_CASE("condensation config") {
  const TcConfig d = parse_tc_config(json::object());
  CHECK(d.mode == TcConfig::Mode::alpha);
  CHECK(d.ambient_dim == 100);
  CHECK(d.latent_dim == 50);
  CHECK(d.alpha == 0.15);
  CHECK(d.positions == 2000);
  REQUIRE(d.alpha_grid.size() == 50);
  CHECK(d.alpha_grid.front() == doctest::Approx(0.01));
  CHECK(d.alpha_grid.back() == doctest::Approx(0.5));
  CHECK(to_json(parse_tc_config(to_json(d))) == to_json(d));
  CHECK_THROWS_AS(parse_tc_config(json{{"latent_dim", 200}}), ConfigError);
  CHECK_THROWS_AS(parse_tc_config(json{{"mode", "sideways"}}), ConfigError);
  CHECK_THROWS_AS(parse_tc_config(json{{"alpha_gird", 1}}), ConfigError);
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-3, 10.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 1e-3);
  CHECK(g[4] == 10.0);
  CHECK(g[2] == doctest::Approx(0.1));
  for (std::size_t i = 1; i < 5; ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(10.0));
}

TEST_CASE("manifest echoes a config that parses again") {
  const auto c = parse_experiment_config(base_config());
  ManifestInfo info{"spectra", to_json(c), 42, 3, {{"cell", 7}}, {"spectra_exact.csv"}, 0.5};
  const json m = make_manifest(info);
  CHECK(m["command"] == "spectra");
  CHECK(m["master_seed"] == 42);
  CHECK(m["threads"] == 3);
  CHECK(m.contains("rng"));
  CHECK(m.contains("version"));
  CHECK(m["files"][0] == "spectra_exact.csv");
  const auto again = parse_experiment_config(m["config"]);
  CHECK(to_json(again) == to_json(c));

  const fs::path dir = scratch("manifest_dir");
  write_manifest(dir, info);
  CHECK(read_json(dir / "manifest.json") == m);
}

}
