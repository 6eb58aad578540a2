#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gimbal/engine.hpp"
#include "gimbal/experiments.hpp"
#include "gimbal/simgen.hpp"

namespace gimbal::io {

/// Bad user input: missing column, malformed number, invalid coordinate.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

inline constexpr const char* kDatasetSchema = "gimbal.dataset.v1";
inline constexpr const char* kRecordsSchema = "gimbal.records.v1";
inline constexpr const char* kPredictionsSchema = "gimbal.predictions.v1";
inline constexpr const char* kSummarySchema = "gimbal.summary.v1";
inline constexpr const char* kPredictSummarySchema = "gimbal.predict_summary.v1";
inline constexpr const char* kReportSchema = "gimbal.report.v1";

/// Reads a header-first CSV with columns lat, lon, x and (when `require_y`)
/// y; an `id` column is optional and other columns are ignored. Blank lines
/// and lines starting with '#' are skipped. Rows are numbered from 1 in
/// error messages.
Dataset parse_dataset(std::istream& in, const std::string& source, bool require_y = true);
Dataset read_dataset(const std::filesystem::path& path, bool require_y = true);

/// "%.17g"; NaN becomes an empty field.
std::string format_number(double v);

/// lat,lon,x,y[,beta1_true] with an id column when the dataset has ids.
void write_dataset(std::ostream& out, const Dataset& data, std::span<const double> beta1 = {});

/// Post-estimation columns attached to each record.
struct RecordExtras {
  std::vector<double> residual;     // y_i - fitted value at the target; NaN if ill-posed
  std::vector<double> local_moran;  // NaN where undefined
  std::vector<bool> fragile;
  bool moran_zero_variance = false;
};

struct DiagnosticOptions {
  double kappa_quantile = 0.95;
  double neff_floor = -1.0;  // < 0 means "use n_min of the config"
  std::size_t k_moran = 8;
};

/// Residuals, local Moran (over the well-posed locations only) and the
/// reliability mask for an in-sample fit.
RecordExtras record_extras(const Dataset& data, std::span<const LocationRecord> records,
                           const GimbalConfig& config, const DiagnosticOptions& options);

std::vector<std::string> records_header();
void write_records(std::ostream& out, const Dataset& data, std::span<const LocationRecord> records,
                   const RecordExtras& extras);

Json to_json(const GimbalConfig& c);
Json to_json(const simgen::SimSpec& s);
Json to_json(const experiments::MapSummary& s);
Json to_json(const experiments::WeightDiffSummary& s);
Json to_json(const experiments::ExperimentReport& r);

/// Overlays the keys present in `j` onto `base`. Unknown keys and wrong
/// types raise InputError.
GimbalConfig config_from_json(const Json& j, GimbalConfig base);
GimbalConfig read_config(const std::filesystem::path& path, GimbalConfig base);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gimbal::io
