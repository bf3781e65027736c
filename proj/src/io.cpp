#include "gmem/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gmem {

namespace {

constexpr int kExactDigits = 17;
constexpr int kTableDigits = 9;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos
                                                                     : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

// Parses "a,b,c" into row r of m; width and finiteness are checked.
template <class Mat>
void parse_row(const std::string& path, std::size_t lineno, std::string_view line,
               std::size_t width, Mat& m, Eigen::Index r) {
  const auto cells = split(line, ',');
  if (cells.size() != width)
    throw ShapeError(path, lineno,
                     "expected " + std::to_string(width) + " values, found " +
                         std::to_string(cells.size()));
  for (std::size_t j = 0; j < width; ++j) {
    double v = 0.0;
    if (!parse_double(cells[j], v))
      throw ParseError(path, lineno, "not a number: '" + std::string(cells[j]) + "'");
    if (!std::isfinite(v))
      throw NonFiniteError(path, lineno, "non-finite value in column " + std::to_string(j + 1));
    m(r, static_cast<Eigen::Index>(j)) = v;
  }
}

}  // namespace

std::string format_double(double v, int digits) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  std::ostringstream os;
  os << "# d=" << data.dim() << " N=" << data.size() << " seed=" << data.seed << "\n";
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points.cols(); ++j) {
      if (j) os << ',';
      os << format_double(data.points(i, j), kExactDigits);
    }
    os << '\n';
  }
  write_text(path, os.str());
}

DatasetFile read_dataset_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  const std::string name = path.string();
  DatasetFile out;
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view v = trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      if (!lines.empty() || out.d) throw HeaderError(name, lineno, "header must be the first line");
      for (auto tok : split(trim(v.substr(1)), ' ')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw HeaderError(name, lineno, "expected key=value");
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        bool ok = false;
        if (key == "d") {
          std::size_t x = 0;
          ok = parse_int(val, x);
          out.d = x;
        } else if (key == "N") {
          std::size_t x = 0;
          ok = parse_int(val, x);
          out.N = x;
        } else if (key == "seed") {
          std::uint64_t x = 0;
          ok = parse_int(val, x);
          out.seed = x;
        }
        if (!ok) throw HeaderError(name, lineno, "bad header field '" + std::string(tok) + "'");
      }
      if (!out.d || !out.N) throw HeaderError(name, lineno, "header needs d and N");
      continue;
    }
    lines.emplace_back(lineno, std::string(v));
  }
  if (lines.empty()) throw ParseError(name, lineno, "no data rows");

  const std::size_t width = out.d ? *out.d : split(lines.front().second, ',').size();
  if (out.N && *out.N != lines.size())
    throw ShapeError(name, lines.back().first,
                     "header says N=" + std::to_string(*out.N) + " but file has " +
                         std::to_string(lines.size()) + " rows");
  out.points.resize(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < lines.size(); ++r)
    parse_row(name, lines[r].first, lines[r].second, width, out.points,
              static_cast<Eigen::Index>(r));
  return out;
}

Dataset load_dataset(const fs::path& path, const ManifoldSpec& spec) {
  DatasetFile f = read_dataset_csv(path);
  if (static_cast<std::size_t>(f.points.cols()) != spec.ambient_dim())
    throw ShapeError(path.string(), 1,
                     "dataset width " + std::to_string(f.points.cols()) + " != spec d=" +
                         std::to_string(spec.ambient_dim()));
  try {
    return Dataset(spec, std::move(f.points), f.seed.value_or(0));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------

ScoreSampleFile read_score_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  const std::string name = path.string();
  ScoreSampleFile f;

  std::string line;
  if (!std::getline(in, line)) throw HeaderError(name, 1, "empty file");
  std::string_view head = trim(line);
  if (head.empty() || head.front() != '#')
    throw HeaderError(name, 1, "first line must be '# d=<int> K=<int> t=<float>'");
  bool have_d = false, have_k = false, have_t = false;
  std::string x0_text;
  for (auto tok : split(trim(head.substr(1)), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw HeaderError(name, 1, "expected key=value, got '" + std::string(tok) + "'");
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    bool ok = true;
    if (key == "d") {
      ok = parse_int(val, f.d) && f.d > 0;
      have_d = true;
    } else if (key == "K") {
      ok = parse_int(val, f.K) && f.K > 0;
      have_k = true;
    } else if (key == "t") {
      ok = parse_double(val, f.t) && std::isfinite(f.t) && f.t > 0.0;
      have_t = true;
    } else if (key == "x0") {
      x0_text = std::string(val);
    } else {
      ok = false;
    }
    if (!ok) throw HeaderError(name, 1, "bad header field '" + std::string(tok) + "'");
  }
  if (!have_d || !have_k || !have_t) throw HeaderError(name, 1, "header needs d, K and t");
  if (!x0_text.empty()) {
    const auto parts = split(x0_text, ';');
    if (parts.size() != f.d) throw HeaderError(name, 1, "x0 length does not match d");
    StateVector x0(static_cast<Eigen::Index>(f.d));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      double v = 0.0;
      if (!parse_double(parts[i], v) || !std::isfinite(v))
        throw HeaderError(name, 1, "bad x0 entry '" + std::string(parts[i]) + "'");
      x0(static_cast<Eigen::Index>(i)) = v;
    }
    f.x0 = std::move(x0);
  }

  f.scores.resize(static_cast<Eigen::Index>(f.K), static_cast<Eigen::Index>(f.d));
  std::size_t lineno = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view v = trim(line);
    if (v.empty()) continue;
    if (rows == f.K)
      throw ShapeError(name, lineno, "more than K=" + std::to_string(f.K) + " rows");
    parse_row(name, lineno, v, f.d, f.scores, static_cast<Eigen::Index>(rows));
    ++rows;
  }
  if (rows != f.K)
    throw ShapeError(name, lineno + 1,
                     "truncated: expected K=" + std::to_string(f.K) + " rows, found " +
                         std::to_string(rows));
  return f;
}

void write_score_file(const fs::path& path, const ScoreSampleFile& file) {
  if (static_cast<std::size_t>(file.scores.rows()) != file.K ||
      static_cast<std::size_t>(file.scores.cols()) != file.d)
    throw std::invalid_argument("write_score_file: matrix shape does not match d, K");
  std::ostringstream os;
  os << "# d=" << file.d << " K=" << file.K << " t=" << format_double(file.t, kExactDigits);
  if (file.x0) {
    os << " x0=";
    for (Eigen::Index i = 0; i < file.x0->size(); ++i) {
      if (i) os << ';';
      os << format_double((*file.x0)(i), kExactDigits);
    }
  }
  os << '\n';
  for (Eigen::Index r = 0; r < file.scores.rows(); ++r) {
    for (Eigen::Index j = 0; j < file.scores.cols(); ++j) {
      if (j) os << ',';
      os << format_double(file.scores(r, j), kExactDigits);
    }
    os << '\n';
  }
  write_text(path, os.str());
}

// ---------------------------------------------------------------------------

void write_spectrum_rows(const fs::path& path, const std::vector<SpectrumRow>& rows) {
  std::ostringstream os;
  os << "estimator,N,t,rep,index,value_raw,value_scaled\n";
  for (const SpectrumRow& r : rows) {
    os << r.estimator << ',' << r.N << ',' << format_double(r.t, kTableDigits) << ',';
    if (r.rep < 0)
      os << "mean";
    else
      os << r.rep;
    os << ',' << r.index << ',' << format_double(r.value_raw, kTableDigits) << ','
       << format_double(r.value_scaled, kTableDigits) << '\n';
  }
  write_text(path, os.str());
}

void write_spectrum_records(const fs::path& path, const std::vector<SpectrumRecord>& records) {
  std::ostringstream os;
  os << "x_id,t,estimator,index,value\n";
  nlohmann::json meta = nlohmann::json::array();
  for (std::size_t id = 0; id < records.size(); ++id) {
    const SpectrumRecord& rec = records[id];
    const std::string est(estimator_name(rec.estimator));
    for (Eigen::Index k = 0; k < rec.values.size(); ++k)
      os << id << ',' << format_double(rec.t, kTableDigits) << ',' << est << ',' << k + 1 << ','
         << format_double(rec.values(k), kTableDigits) << '\n';
    std::vector<double> xs(rec.x_star.begin(), rec.x_star.end());
    meta.push_back({{"x_id", id},
                    {"t", rec.t},
                    {"estimator", est},
                    {"oracle", rec.oracle},
                    {"K", rec.K},
                    {"scale", rec.scale},
                    {"scaling", rec.scaling},
                    {"values", "raw singular value * scale"},
                    {"rank_deficient", rec.rank_deficient},
                    {"length", rec.values.size()},
                    {"x_star", xs}});
  }
  write_text(path, os.str());
  fs::path sidecar = path;
  sidecar += ".json";
  write_json(sidecar, nlohmann::json{{"records", meta}});
}

}  // namespace gmem
