#pragma once

#include "gmem/linear_model.hpp"
#include "gmem/spectral.hpp"
#include "gmem/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gmem {

namespace fs = std::filesystem;

// Distinct failure kinds when reading a score-sample file. All are ParseErrors
// (exit code 4) and carry the offending line number.
class HeaderError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ShapeError : public ParseError {
 public:
  using ParseError::ParseError;
};

class NonFiniteError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// "%.*g" with the given number of significant digits; "-0" prints as "0".
std::string format_double(double v, int digits);

// ---------------------------------------------------------------------------
// Dataset CSV: optional "# d=<int> N=<int> seed=<int>" header, then one point
// per row.

void write_dataset_csv(const fs::path& path, const Dataset& data);

struct DatasetFile {
  RowMatrix points;
  std::optional<std::size_t> d;
  std::optional<std::size_t> N;
  std::optional<std::uint64_t> seed;
};

DatasetFile read_dataset_csv(const fs::path& path);

/// Reads a dataset CSV and validates it against spec (header, width, zero
/// coordinates). The seed defaults to 0 when the header has none.
Dataset load_dataset(const fs::path& path, const ManifoldSpec& spec);

// ---------------------------------------------------------------------------
// Score samples produced elsewhere:
//   # d=<int> K=<int> t=<float> [x0=<v1>;<v2>;...]
//   K lines of d comma-separated values

struct ScoreSampleFile {
  std::size_t d = 0;
  std::size_t K = 0;
  double t = 0.0;
  std::optional<StateVector> x0;
  Matrix scores;  // K x d, one score vector per row
};

ScoreSampleFile read_score_file(const fs::path& path);
void write_score_file(const fs::path& path, const ScoreSampleFile& file);

// ---------------------------------------------------------------------------
// Spectrum tables

/// One row of estimator,N,t,rep,index,value_raw,value_scaled. rep < 0 marks
/// the across-repetition mean, written as "mean".
struct SpectrumRow {
  std::string estimator;
  std::size_t N;
  double t;
  int rep;
  std::size_t index;  // 1-based position in the descending spectrum
  double value_raw;
  double value_scaled;
};

void write_spectrum_rows(const fs::path& path, const std::vector<SpectrumRow>& rows);

/// x_id,t,estimator,index,value plus <path>.json holding scale, oracle, K,
/// x_star and flags for each record.
void write_spectrum_records(const fs::path& path, const std::vector<SpectrumRecord>& records);

/// Writes text, creating parent directories. Throws IoError.
void write_text(const fs::path& path, const std::string& text);

void write_json(const fs::path& path, const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);

}  // namespace gmem
