#include "shaftpower/weather.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "shaftpower/errors.hpp"

namespace shaftpower::weather {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Bracket {
  std::size_t lower = 0;
  double frac = 0.0;
};

template <typename T>
Bracket locate(const std::vector<T>& axis, double value, const char* name) {
  const double lo = static_cast<double>(axis.front());
  const double hi = static_cast<double>(axis.back());
  if (!(value >= lo && value <= hi)) {
    throw OutOfDomainError(name, fmt::format("{} = {} outside grid range [{}, {}]", name, value, lo, hi));
  }
  auto it = std::upper_bound(axis.begin(), axis.end(), value,
                             [](double v, const T& a) { return v < static_cast<double>(a); });
  std::size_t i = static_cast<std::size_t>(std::distance(axis.begin(), it));
  i = std::clamp<std::size_t>(i, 1, axis.size() - 1) - 1;
  const double a0 = static_cast<double>(axis[i]);
  const double a1 = static_cast<double>(axis[i + 1]);
  return {i, (value - a0) / (a1 - a0)};
}

/// Weighted sum over the 8 corners; `value(flat_index)` supplies each corner.
template <typename Value>
double blend(const WeatherGrid& grid, double time, double lat, double lon, Value value) {
  const Bracket t = locate(grid.time_axis, time, "time");
  const Bracket la = locate(grid.lat_axis, lat, "lat");
  const Bracket lo = locate(grid.lon_axis, lon, "lon");
  double acc = 0.0;
  for (int dt = 0; dt < 2; ++dt) {
    const double wt = dt ? t.frac : 1.0 - t.frac;
    for (int dla = 0; dla < 2; ++dla) {
      const double wla = dla ? la.frac : 1.0 - la.frac;
      for (int dlo = 0; dlo < 2; ++dlo) {
        const double w = wt * wla * (dlo ? lo.frac : 1.0 - lo.frac);
        if (w == 0.0) continue;
        acc += w * value(grid.flat_index(t.lower + dt, la.lower + dla, lo.lower + dlo));
      }
    }
  }
  return acc;
}

const std::vector<double>& field_data(const WeatherGrid& grid, const std::string& field) {
  const auto it = grid.fields.find(field);
  if (it == grid.fields.end()) throw ConfigError(fmt::format("weather grid has no field '{}'", field));
  return it->second;
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360.
  return r >= 360.0 ? 0.0 : r;
}

template <typename T>
void check_axis(const std::vector<T>& axis, const char* name) {
  if (axis.size() < 2) throw ConfigError(fmt::format("grid axis '{}' needs at least 2 nodes", name));
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw ConfigError(fmt::format("grid axis '{}' is not strictly increasing", name));
    }
  }
}

}  // namespace

void WeatherGrid::validate() const {
  check_axis(lat_axis, "lat");
  check_axis(lon_axis, "lon");
  check_axis(time_axis, "time");
  for (const auto& [name, values] : fields) {
    if (values.size() != node_count()) {
      throw ConfigError(fmt::format("field '{}' has {} values, grid shape needs {}", name,
                                    values.size(), node_count()));
    }
  }
}

double trilinear(const WeatherGrid& grid, const std::string& field, double time, double lat,
                 double lon) {
  const auto& data = field_data(grid, field);
  return blend(grid, time, lat, lon, [&](std::size_t i) { return data[i]; });
}

double trilinear_direction(const WeatherGrid& grid, const std::string& field, double time,
                           double lat, double lon) {
  const auto& data = field_data(grid, field);
  const double s = blend(grid, time, lat, lon, [&](std::size_t i) { return std::sin(data[i] * kDegToRad); });
  const double c = blend(grid, time, lat, lon, [&](std::size_t i) { return std::cos(data[i] * kDegToRad); });
  return wrap_degrees(std::atan2(s, c) / kDegToRad);
}

double relative_direction(double dir_north_deg, double course_deg) {
  return wrap_degrees(dir_north_deg - course_deg);
}

FuseResult fuse(std::span<const data::SensorRecord> records, const WeatherGrid& grid) {
  for (const auto* name : {&kWaveHeight, &kSwellHeight, &kWaveDirection, &kWindDirection}) {
    if (!grid.fields.contains(*name)) {
      throw ConfigError(fmt::format("weather grid is missing required field '{}'", *name));
    }
  }
  FuseResult out;
  out.enriched.reserve(records.size());
  for (const auto& rec : records) {
    try {
      const auto t = static_cast<double>(rec.timestamp);
      data::SensorRecord r = rec;
      r.wave_height_m = trilinear(grid, kWaveHeight, t, rec.lat_deg, rec.lon_deg);
      r.swell_height_m = trilinear(grid, kSwellHeight, t, rec.lat_deg, rec.lon_deg);
      r.wave_dir_rel_deg = relative_direction(
          trilinear_direction(grid, kWaveDirection, t, rec.lat_deg, rec.lon_deg), rec.course_deg);
      r.wind_dir_rel_deg = relative_direction(
          trilinear_direction(grid, kWindDirection, t, rec.lat_deg, rec.lon_deg), rec.course_deg);
      out.enriched.push_back(std::move(r));
    } catch (const OutOfDomainError& e) {
      out.rejects.push_back({rec, e.what()});
    }
  }
  return out;
}

void save_grid(const std::string& path, const WeatherGrid& grid) {
  grid.validate();
  nlohmann::ordered_json j;
  j["lat_axis"] = grid.lat_axis;
  j["lon_axis"] = grid.lon_axis;
  std::vector<std::string> times;
  times.reserve(grid.time_axis.size());
  for (auto t : grid.time_axis) times.push_back(format_iso8601(t));
  j["time_axis"] = times;
  j["shape"] = {grid.time_axis.size(), grid.lat_axis.size(), grid.lon_axis.size()};
  j["layout"] = "row-major (time, lat, lon)";
  auto& fields = j["fields"];
  fields = nlohmann::ordered_json::object();
  for (const auto& [name, values] : grid.fields) fields[name] = values;
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  out << j.dump() << '\n';
}

WeatherGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open weather grid '{}'", path));
  WeatherGrid grid;
  try {
    const auto j = nlohmann::json::parse(in);
    grid.lat_axis = j.at("lat_axis").get<std::vector<double>>();
    grid.lon_axis = j.at("lon_axis").get<std::vector<double>>();
    for (const auto& t : j.at("time_axis")) grid.time_axis.push_back(parse_iso8601(t.get<std::string>()));
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape != std::vector<std::size_t>{grid.time_axis.size(), grid.lat_axis.size(), grid.lon_axis.size()}) {
      throw DataError(fmt::format("{}: shape does not match the axes", path));
    }
    for (const auto& [name, values] : j.at("fields").items()) {
      grid.fields[name] = values.get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: malformed grid file: {}", path, e.what()));
  }
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    throw DataError(fmt::format("{}: {}", path, e.what()));
  }
  return grid;
}

}  // namespace shaftpower::weather
