#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shaftpower/timeutil.hpp"

namespace shaftpower::data {

/// One high-frequency onboard observation. Weather fields are empty until
/// the record has been through weather fusion.
struct SensorRecord {
  UtcSeconds timestamp = 0;
  double stw_knots = 0.0;
  double rpm = 0.0;
  double draft_aft_m = 0.0;
  double draft_fore_m = 0.0;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double course_deg = 0.0;
  double shaft_power_kw = 0.0;

  std::optional<double> wave_height_m;
  std::optional<double> swell_height_m;
  std::optional<double> wave_dir_rel_deg;
  std::optional<double> wind_dir_rel_deg;

  UtcSeconds time() const { return timestamp; }
  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

/// One daily manually logged report; directions are already vessel-relative.
struct NoonReport {
  UtcSeconds date = 0;  ///< midnight UTC of the report day
  double stw_knots = 0.0;
  double rpm = 0.0;
  double draft_aft_m = 0.0;
  double draft_fore_m = 0.0;
  double wave_height_m = 0.0;
  double swell_height_m = 0.0;
  double wave_dir_rel_deg = 0.0;
  double wind_dir_rel_deg = 0.0;
  double shaft_power_kw = 0.0;

  UtcSeconds time() const { return date; }
  friend bool operator==(const NoonReport&, const NoonReport&) = default;
};

enum class VesselCategory { kSister, kSimilar, kDifferent };

std::string to_string(VesselCategory c);
/// Throws ConfigError for anything outside {sister, similar, different}.
VesselCategory parse_category(const std::string& text);

struct VesselMeta {
  std::string vessel_id;
  VesselCategory category = VesselCategory::kSister;
  double length_m = 0.0;
  double beam_m = 0.0;
};

// ---- ingestion -----------------------------------------------------------

inline const std::vector<std::string> kSensorColumns = {
    "timestamp", "stw_knots", "rpm",     "draft_aft_m",   "draft_fore_m",
    "lat_deg",   "lon_deg",   "course_deg", "shaft_power_kw"};
/// Optional trailing columns written for fused sensor files.
inline const std::vector<std::string> kFusedColumns = {"wave_height_m", "swell_height_m",
                                                       "wave_dir_rel_deg", "wind_dir_rel_deg"};
inline const std::vector<std::string> kNoonColumns = {
    "date",          "stw_knots",      "rpm",              "draft_aft_m",      "draft_fore_m",
    "wave_height_m", "swell_height_m", "wave_dir_rel_deg", "wind_dir_rel_deg", "shaft_power_kw"};

struct RowError {
  std::size_t line = 0;  ///< 1-based line number in the file
  std::string message;
};

template <typename Record>
struct IngestResult {
  std::vector<Record> records;
  std::vector<RowError> rejects;
  std::vector<std::string> warnings;
};

/// Throws DataError if the file is missing or a required column is absent.
/// Row-level problems are collected in `rejects`; valid rows are kept.
IngestResult<SensorRecord> load_sensor_csv(const std::string& path);
IngestResult<NoonReport> load_noon_csv(const std::string& path);

/// Writes with 17 significant digits so that reading back is lossless.
/// Sensor files get the fused weather columns when every record carries them.
void write_sensor_csv(const std::string& path, std::span<const SensorRecord> records);
void write_noon_csv(const std::string& path, std::span<const NoonReport> records);

// ---- preprocessing -------------------------------------------------------

struct PreprocessOptions {
  double min_stw_knots = 2.0;
  double min_rpm = 1.0;
  double min_power_kw = 1.0;
  double max_power_kw = 12000.0;
  bool apply_power_outlier_cut = true;
};

/// Drop counts per rule. A row failing several rules is counted once, under
/// the first failing rule in the order below.
struct DropReport {
  std::size_t low_speed = 0;
  std::size_t low_rpm = 0;
  std::size_t low_power = 0;
  std::size_t power_outlier = 0;
  std::size_t total() const { return low_speed + low_rpm + low_power + power_outlier; }
  friend bool operator==(const DropReport&, const DropReport&) = default;
};

template <typename Record>
struct Preprocessed {
  std::vector<Record> kept;
  std::vector<Record> dropped;
  DropReport report;
};

Preprocessed<SensorRecord> preprocess(std::span<const SensorRecord> records,
                                      const PreprocessOptions& options = {});
Preprocessed<NoonReport> preprocess(std::span<const NoonReport> records,
                                    const PreprocessOptions& options = {});

// ---- temporal split ------------------------------------------------------

struct SplitSpec {
  UtcSeconds train_end = 0;  ///< first instant belonging to the test set
};

template <typename Record>
struct Split {
  std::vector<Record> train;
  std::vector<Record> test;
};

/// train = time < boundary, test = time >= boundary. Throws ConfigError if
/// either side would be empty or the records are not time-ordered.
Split<SensorRecord> temporal_split(std::span<const SensorRecord> records, const SplitSpec& spec);
Split<NoonReport> temporal_split(std::span<const NoonReport> records, const SplitSpec& spec);

}  // namespace shaftpower::data
