#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "shaftpower/records.hpp"
#include "shaftpower/timeutil.hpp"

namespace shaftpower::weather {

inline const std::string kWaveHeight = "wave_height_m";
inline const std::string kSwellHeight = "swell_height_m";
inline const std::string kWaveDirection = "wave_dir_north_deg";
inline const std::string kWindDirection = "wind_dir_north_deg";

/// Regular time x lat x lon lattice of met-ocean fields. Each field is stored
/// flat in row-major (time, lat, lon) order.
struct WeatherGrid {
  std::vector<double> lat_axis;       ///< strictly increasing, degrees
  std::vector<double> lon_axis;       ///< strictly increasing, degrees
  std::vector<UtcSeconds> time_axis;  ///< strictly increasing
  std::map<std::string, std::vector<double>> fields;

  std::size_t node_count() const { return time_axis.size() * lat_axis.size() * lon_axis.size(); }
  std::size_t flat_index(std::size_t t, std::size_t la, std::size_t lo) const {
    return (t * lat_axis.size() + la) * lon_axis.size() + lo;
  }
  /// Throws ConfigError if axes or field shapes are inconsistent.
  void validate() const;
};

/// Blend of the 8 lattice values surrounding (time, lat, lon). No extrapolation:
/// a query outside the grid throws OutOfDomainError naming the axis.
double trilinear(const WeatherGrid& grid, const std::string& field, double time, double lat,
                 double lon);

/// Interpolates a direction field through its unit vector so the 359/1 degree
/// wrap is handled. Returns degrees in [0, 360).
double trilinear_direction(const WeatherGrid& grid, const std::string& field, double time,
                           double lat, double lon);

/// Non-negative (direction - course) mod 360.
double relative_direction(double dir_north_deg, double course_deg);

struct FuseReject {
  data::SensorRecord record;
  std::string reason;
};

struct FuseResult {
  std::vector<data::SensorRecord> enriched;
  std::vector<FuseReject> rejects;
};

/// Attaches wave/swell heights and vessel-relative wave/wind directions to every
/// record inside the grid. Records outside the grid go to `rejects`.
/// Throws ConfigError if a required field is missing from the grid.
FuseResult fuse(std::span<const data::SensorRecord> records, const WeatherGrid& grid);

/// JSON grid file: lat_axis, lon_axis, time_axis (ISO-8601), shape, fields.
void save_grid(const std::string& path, const WeatherGrid& grid);
WeatherGrid load_grid(const std::string& path);

}  // namespace shaftpower::weather
