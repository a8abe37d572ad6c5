#include "shaftpower/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include <fmt/format.h>

#include "shaftpower/errors.hpp"

namespace shaftpower::synth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

/// Sum of travelling sinusoids normalized to [-1, 1].
class SmoothField {
 public:
  SmoothField(std::mt19937_64& rng, int components) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < components; ++k) {
      Wave w;
      w.amplitude = 0.5 + unit(rng);
      const double spatial_period_deg = 4.0 + 11.0 * unit(rng);
      const double heading = 2.0 * kPi * unit(rng);
      w.k_lat = 2.0 * kPi / spatial_period_deg * std::cos(heading);
      w.k_lon = 2.0 * kPi / spatial_period_deg * std::sin(heading);
      const double period_days = 2.0 + 7.0 * unit(rng);
      w.omega = 2.0 * kPi / (period_days * kSecondsPerDay);
      w.phase = 2.0 * kPi * unit(rng);
      total_ += w.amplitude;
      waves_.push_back(w);
    }
  }

  double operator()(double t, double lat, double lon) const {
    double s = 0.0;
    for (const auto& w : waves_) s += w.amplitude * std::sin(w.k_lat * lat + w.k_lon * lon + w.omega * t + w.phase);
    return s / total_;
  }

 private:
  struct Wave {
    double amplitude, k_lat, k_lon, omega, phase;
  };
  std::vector<Wave> waves_;
  double total_ = 0.0;
};

double perturb(double value, double lo, double hi, std::mt19937_64& rng, bool random_sign) {
  std::uniform_real_distribution<double> mag(lo, hi);
  double m = mag(rng);
  if (random_sign && std::bernoulli_distribution(0.5)(rng)) m = -m;
  return value * (1.0 + m);
}

nlohmann::ordered_json vessel_to_json(const FleetVessel& v) {
  const auto& s = v.spec;
  const auto& sc = v.scenario;
  nlohmann::ordered_json j;
  j["vessel_id"] = s.vessel_id;
  j["category"] = data::to_string(s.category);
  j["length_m"] = s.length_m;
  j["beam_m"] = s.beam_m;
  j["power_coeff"] = s.power_coeff;
  j["rpm_exponent"] = s.rpm_exponent;
  j["wave_drag_coeff"] = s.wave_drag_coeff;
  j["swell_drag_coeff"] = s.swell_drag_coeff;
  j["draft_sensitivity"] = s.draft_sensitivity;
  j["noise_sd_sensor"] = s.noise_sd_sensor;
  j["noise_sd_noon"] = s.noise_sd_noon;
  j["report_bias"] = s.report_bias;
  j["noon_outlier_prob"] = s.noon_outlier_prob;
  j["design_rpm"] = s.design_rpm;
  j["speed_per_rpm"] = s.speed_per_rpm;
  j["draft_laden_m"] = s.draft_laden_m;
  j["draft_ballast_m"] = s.draft_ballast_m;
  j["start"] = format_date(sc.start);
  j["duration_days"] = sc.duration_days;
  j["sample_interval_s"] = sc.sample_interval_s;
  j["leg_days_mean"] = sc.leg_days_mean;
  j["idle_leg_prob"] = sc.idle_leg_prob;
  j["start_lat"] = sc.start_lat;
  j["start_lon"] = sc.start_lon;
  j["seed"] = sc.seed;
  return j;
}

FleetVessel vessel_from_json(const nlohmann::json& j) {
  FleetVessel v;
  auto& s = v.spec;
  auto& sc = v.scenario;
  s.vessel_id = j.at("vessel_id").get<std::string>();
  s.category = data::parse_category(j.value("category", std::string("sister")));
  s.length_m = j.value("length_m", s.length_m);
  s.beam_m = j.value("beam_m", s.beam_m);
  s.power_coeff = j.value("power_coeff", s.power_coeff);
  s.rpm_exponent = j.value("rpm_exponent", s.rpm_exponent);
  s.wave_drag_coeff = j.value("wave_drag_coeff", s.wave_drag_coeff);
  s.swell_drag_coeff = j.value("swell_drag_coeff", s.swell_drag_coeff);
  s.draft_sensitivity = j.value("draft_sensitivity", s.draft_sensitivity);
  s.noise_sd_sensor = j.value("noise_sd_sensor", s.noise_sd_sensor);
  s.noise_sd_noon = j.value("noise_sd_noon", 4.0 * s.noise_sd_sensor);
  s.report_bias = j.value("report_bias", s.report_bias);
  s.noon_outlier_prob = j.value("noon_outlier_prob", s.noon_outlier_prob);
  s.design_rpm = j.value("design_rpm", s.design_rpm);
  s.speed_per_rpm = j.value("speed_per_rpm", s.speed_per_rpm);
  s.draft_laden_m = j.value("draft_laden_m", s.draft_laden_m);
  s.draft_ballast_m = j.value("draft_ballast_m", s.draft_ballast_m);
  sc.start = parse_date(j.at("start").get<std::string>());
  sc.duration_days = j.at("duration_days").get<int>();
  sc.sample_interval_s = j.value("sample_interval_s", sc.sample_interval_s);
  sc.leg_days_mean = j.value("leg_days_mean", sc.leg_days_mean);
  sc.idle_leg_prob = j.value("idle_leg_prob", sc.idle_leg_prob);
  sc.start_lat = j.value("start_lat", sc.start_lat);
  sc.start_lon = j.value("start_lon", sc.start_lon);
  sc.seed = j.value("seed", std::uint64_t{0});
  return v;
}

FleetConfig make_fleet(std::uint64_t seed, UtcSeconds source_start, UtcSeconds target_start,
                       UtcSeconds end, UtcSeconds boundary) {
  std::mt19937_64 rng(seed);
  const VesselSpec reference;
  FleetConfig fleet;
  fleet.seed = seed;
  fleet.split_boundary = boundary;

  struct Entry {
    const char* id;
    data::VesselCategory category;
  };
  const Entry entries[] = {{"S_V1", data::VesselCategory::kSister},
                           {"S_V2", data::VesselCategory::kSister},
                           {"S_V3", data::VesselCategory::kSister},
                           {"S_V4", data::VesselCategory::kSister},
                           {"SM_V1", data::VesselCategory::kSimilar},
                           {"D_V1", data::VesselCategory::kDifferent}};
  std::uniform_real_distribution<double> lat_pick(42.0, 48.0);
  std::uniform_real_distribution<double> lon_pick(-28.0, -22.0);
  std::uint64_t index = 0;
  for (const auto& e : entries) {
    FleetVessel v;
    v.spec = derive_vessel(reference, e.id, e.category, rng);
    const bool source = index == 0;
    v.spec.noise_sd_sensor = source ? 30.0 : 80.0;
    v.spec.noise_sd_noon = 4.0 * v.spec.noise_sd_sensor;
    v.spec.report_bias = source ? 50.0 : 100.0;
    v.scenario.start = source ? source_start : target_start;
    v.scenario.duration_days = static_cast<int>((end - v.scenario.start) / kSecondsPerDay);
    v.scenario.start_lat = lat_pick(rng);
    v.scenario.start_lon = lon_pick(rng);
    v.scenario.seed = seed * 1000 + index + 1;
    fleet.vessels.push_back(v);
    ++index;
  }
  fleet.grid.start = std::min(source_start, target_start);
  fleet.grid.end = end + kSecondsPerDay;
  return fleet;
}

}  // namespace

double ground_truth_power(const VesselSpec& spec, const OperatingState& s) {
  const double propulsion = spec.power_coeff * std::pow(std::max(s.rpm, 0.0), spec.rpm_exponent);
  const double waves = spec.wave_drag_coeff * s.wave_height_m * s.wave_height_m *
                       (1.0 + std::cos(s.wave_dir_rel_deg * kDegToRad));
  const double swell = spec.swell_drag_coeff * s.swell_height_m * s.swell_height_m;
  const double hull = spec.draft_sensitivity * s.draft_mid_m * s.stw_knots * s.stw_knots;
  return propulsion + waves + swell + hull;
}

OperatingState sample_operating_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  OperatingState s;
  s.rpm = 60.0 + 35.0 * u(rng);
  s.stw_knots = 0.165 * s.rpm - 0.5 * u(rng);
  s.draft_mid_m = 7.0 + 3.5 * u(rng);
  s.wave_height_m = 4.0 * u(rng);
  s.swell_height_m = 2.5 * u(rng);
  s.wave_dir_rel_deg = 360.0 * u(rng);
  return s;
}

void VoyageScenario::validate() const {
  if (sample_interval_s <= 0 || kSecondsPerDay % sample_interval_s != 0) {
    throw ConfigError(fmt::format("sample interval {} s does not divide a day", sample_interval_s));
  }
  if (duration_days < 2) throw ConfigError("a voyage must last at least 2 days");
}

weather::WeatherGrid generate_weather_grid(const GridSpec& spec, std::uint64_t seed) {
  if (!(spec.lat_max > spec.lat_min) || !(spec.lon_max > spec.lon_min) || !(spec.spacing_deg > 0.0) ||
      spec.time_step_s <= 0 || spec.end <= spec.start) {
    throw ConfigError("invalid weather grid specification");
  }
  weather::WeatherGrid grid;
  auto axis = [&](double lo, double hi) {
    std::vector<double> a;
    const int n = static_cast<int>(std::ceil((hi - lo) / spec.spacing_deg - 1e-9));
    for (int i = 0; i <= n; ++i) a.push_back(lo + spec.spacing_deg * i);
    return a;
  };
  grid.lat_axis = axis(spec.lat_min, spec.lat_max);
  grid.lon_axis = axis(spec.lon_min, spec.lon_max);
  for (UtcSeconds t = spec.start;; t += spec.time_step_s) {
    grid.time_axis.push_back(t);
    if (t >= spec.end) break;
  }

  std::mt19937_64 rng(seed);
  const SmoothField wave(rng, 4), swell(rng, 4), dir(rng, 3), wind(rng, 3);
  constexpr double kYear = 365.25 * kSecondsPerDay;
  const double base_dir = 360.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  const std::size_t n = grid.node_count();
  std::vector<double> wave_h(n), swell_h(n), wave_dir(n), wind_dir(n);
  for (std::size_t ti = 0; ti < grid.time_axis.size(); ++ti) {
    const auto t = static_cast<double>(grid.time_axis[ti]);
    // Rougher seas in winter (January peak).
    const double season = 0.25 * std::cos(2.0 * kPi * (t - 0.0) / kYear);
    for (std::size_t la = 0; la < grid.lat_axis.size(); ++la) {
      for (std::size_t lo = 0; lo < grid.lon_axis.size(); ++lo) {
        const double lat = grid.lat_axis[la];
        const double lon = grid.lon_axis[lo];
        const std::size_t i = grid.flat_index(ti, la, lo);
        wave_h[i] = spec.mean_wave_height_m * std::exp(0.5 * wave(t, lat, lon) + season);
        swell_h[i] = spec.mean_swell_height_m * std::exp(0.5 * swell(t, lat, lon) + season);
        wave_dir[i] = wrap360(base_dir + 90.0 * dir(t, lat, lon));
        wind_dir[i] = wrap360(wave_dir[i] + 30.0 * wind(t, lat, lon));
      }
    }
  }
  grid.fields[weather::kWaveHeight] = std::move(wave_h);
  grid.fields[weather::kSwellHeight] = std::move(swell_h);
  grid.fields[weather::kWaveDirection] = std::move(wave_dir);
  grid.fields[weather::kWindDirection] = std::move(wind_dir);
  return grid;
}

std::vector<data::SensorRecord> gen_sensor_stream(const VesselSpec& spec,
                                                  const VoyageScenario& scenario,
                                                  const weather::WeatherGrid& grid) {
  scenario.validate();
  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int steps_per_day = static_cast<int>(kSecondsPerDay / scenario.sample_interval_s);
  const std::size_t total = static_cast<std::size_t>(scenario.duration_days) * steps_per_day;
  constexpr double kMargin = 0.3;
  const double lat_lo = grid.lat_axis.front() + kMargin, lat_hi = grid.lat_axis.back() - kMargin;
  const double lon_lo = grid.lon_axis.front() + kMargin, lon_hi = grid.lon_axis.back() - kMargin;

  double lat = std::clamp(scenario.start_lat, lat_lo, lat_hi);
  double lon = std::clamp(scenario.start_lon, lon_lo, lon_hi);
  double course = 360.0 * u(rng);
  double setpoint = spec.design_rpm;
  double rpm = setpoint;
  double draft = spec.draft_laden_m;
  double trim = 0.5;
  bool idle = false;
  long leg_left = 0;

  std::vector<data::SensorRecord> out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    if (leg_left <= 0) {
      idle = u(rng) < scenario.idle_leg_prob;
      const double days = idle ? 0.25 + 0.75 * u(rng)
                               : std::max(0.5, -scenario.leg_days_mean * std::log(1.0 - u(rng)));
      leg_left = std::max(1L, std::lround(days * steps_per_day));
      setpoint = spec.design_rpm * (0.8 + 0.25 * u(rng));
      draft = u(rng) < 0.55 ? spec.draft_laden_m : spec.draft_ballast_m;
      draft += 0.3 * gauss(rng);
      trim = 1.5 * u(rng);
      course = 360.0 * u(rng);
    }
    --leg_left;

    const UtcSeconds t = scenario.start + static_cast<UtcSeconds>(i) * scenario.sample_interval_s;
    const auto tf = static_cast<double>(t);
    const double wave_h = weather::trilinear(grid, weather::kWaveHeight, tf, lat, lon);
    const double swell_h = weather::trilinear(grid, weather::kSwellHeight, tf, lat, lon);
    const double wave_rel = weather::relative_direction(
        weather::trilinear_direction(grid, weather::kWaveDirection, tf, lat, lon), course);
    const double wind_rel = weather::relative_direction(
        weather::trilinear_direction(grid, weather::kWindDirection, tf, lat, lon), course);

    double stw = 0.0;
    if (idle) {
      rpm = 0.0;
      stw = 0.2 + 1.3 * u(rng);
    } else {
      if (rpm < 0.3 * spec.design_rpm) rpm = setpoint;
      rpm += 0.15 * (setpoint - rpm) + 0.8 * gauss(rng);
      rpm = std::max(rpm, 0.3 * spec.design_rpm);
      const double head_sea = 0.5 * (1.0 + std::cos(wave_rel * kDegToRad));
      stw = std::max(2.5, spec.speed_per_rpm * rpm - 0.25 * wave_h * head_sea + 0.08 * gauss(rng));
    }

    data::SensorRecord r;
    r.timestamp = t;
    r.stw_knots = stw;
    r.rpm = rpm;
    r.draft_aft_m = draft + 0.5 * trim + 0.02 * gauss(rng);
    r.draft_fore_m = draft - 0.5 * trim + 0.02 * gauss(rng);
    r.lat_deg = lat;
    r.lon_deg = lon;
    r.course_deg = course;
    r.wave_height_m = wave_h;
    r.swell_height_m = swell_h;
    r.wave_dir_rel_deg = wave_rel;
    r.wind_dir_rel_deg = wind_rel;
    const OperatingState state{rpm, stw, 0.5 * (r.draft_aft_m + r.draft_fore_m), wave_h, swell_h,
                               wave_rel};
    r.shaft_power_kw = ground_truth_power(spec, state) + spec.noise_sd_sensor * gauss(rng);
    out.push_back(r);

    // Advance along the course, bouncing off the edges of the weather box.
    const double nm = stw * scenario.sample_interval_s / 3600.0;
    lat += nm / 60.0 * std::cos(course * kDegToRad);
    lon += nm / 60.0 * std::sin(course * kDegToRad) / std::cos(lat * kDegToRad);
    if (lat < lat_lo || lat > lat_hi) {
      lat = std::clamp(lat, lat_lo, lat_hi);
      course = wrap360(180.0 - course);
    }
    if (lon < lon_lo || lon > lon_hi) {
      lon = std::clamp(lon, lon_lo, lon_hi);
      course = wrap360(360.0 - course);
    }
    course = wrap360(course + 1.5 * gauss(rng));
  }
  return out;
}

double circular_mean_deg(std::span<const double> angles) {
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a * kDegToRad);
    c += std::cos(a * kDegToRad);
  }
  return wrap360(std::atan2(s, c) / kDegToRad);
}

std::vector<data::NoonReport> gen_noon_reports(std::span<const data::SensorRecord> stream,
                                               const VesselSpec& spec, std::uint64_t seed,
                                               int sample_interval_s) {
  if (sample_interval_s <= 0 || kSecondsPerDay % sample_interval_s != 0) {
    throw ConfigError("sample interval must divide a day");
  }
  const auto per_day = static_cast<std::size_t>(kSecondsPerDay / sample_interval_s);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<data::NoonReport> out;
  std::size_t begin = 0;
  while (begin < stream.size()) {
    const auto day = day_index(stream[begin].timestamp);
    std::size_t end = begin;
    while (end < stream.size() && day_index(stream[end].timestamp) == day) ++end;
    const auto rows = stream.subspan(begin, end - begin);
    begin = end;
    if (rows.size() != per_day) continue;

    data::NoonReport r;
    r.date = day * kSecondsPerDay;
    std::vector<double> wave_dirs, wind_dirs;
    double power = 0.0;
    for (const auto& s : rows) {
      if (!s.wave_height_m || !s.swell_height_m || !s.wave_dir_rel_deg || !s.wind_dir_rel_deg) {
        throw DataError("noon aggregation needs a weather-fused sensor stream");
      }
      r.stw_knots += s.stw_knots;
      r.rpm += s.rpm;
      r.draft_aft_m += s.draft_aft_m;
      r.draft_fore_m += s.draft_fore_m;
      r.wave_height_m += *s.wave_height_m;
      r.swell_height_m += *s.swell_height_m;
      wave_dirs.push_back(*s.wave_dir_rel_deg);
      wind_dirs.push_back(*s.wind_dir_rel_deg);
      power += s.shaft_power_kw;
    }
    const auto n = static_cast<double>(rows.size());
    r.stw_knots /= n;
    r.rpm /= n;
    r.draft_aft_m /= n;
    r.draft_fore_m /= n;
    r.wave_height_m /= n;
    r.swell_height_m /= n;
    r.wave_dir_rel_deg = circular_mean_deg(wave_dirs);
    r.wind_dir_rel_deg = circular_mean_deg(wind_dirs);
    r.shaft_power_kw = power / n + spec.report_bias + spec.noise_sd_noon * gauss(rng);
    if (spec.noon_outlier_prob > 0.0 && u(rng) < spec.noon_outlier_prob) r.shaft_power_kw *= 10.0;
    out.push_back(r);
  }
  if (out.empty()) throw DataError("sensor stream does not cover a single complete day");
  return out;
}

VesselSpec derive_vessel(const VesselSpec& reference, std::string id,
                         data::VesselCategory category, std::mt19937_64& rng) {
  VesselSpec v = reference;
  v.vessel_id = std::move(id);
  v.category = category;
  if (category == data::VesselCategory::kSister) {
    v.power_coeff = perturb(reference.power_coeff, -0.005, 0.005, rng, false);
    v.wave_drag_coeff = perturb(reference.wave_drag_coeff, -0.005, 0.005, rng, false);
    v.swell_drag_coeff = perturb(reference.swell_drag_coeff, -0.005, 0.005, rng, false);
    v.draft_sensitivity = perturb(reference.draft_sensitivity, -0.005, 0.005, rng, false);
    return v;
  }
  // A similar or different hull is either larger or smaller than the reference,
  // so every resistance term moves the same way.
  const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
  auto scaled = [&](double value, double lo, double hi) {
    return value * (1.0 + sign * std::uniform_real_distribution<double>(lo, hi)(rng));
  };
  if (category == data::VesselCategory::kSimilar) {
    v.length_m = 212.0;
    v.beam_m = 33.0;
    v.power_coeff = scaled(reference.power_coeff, 0.05, 0.10);
    v.wave_drag_coeff = scaled(reference.wave_drag_coeff, 0.05, 0.10);
    v.swell_drag_coeff = scaled(reference.swell_drag_coeff, 0.05, 0.10);
    v.draft_sensitivity = scaled(reference.draft_sensitivity, 0.05, 0.10);
    return v;
  }
  v.length_m = sign > 0 ? 225.0 : 185.0;
  v.beam_m = sign > 0 ? 34.0 : 30.0;
  v.power_coeff = scaled(reference.power_coeff, 0.10, 0.20);
  v.wave_drag_coeff = scaled(reference.wave_drag_coeff, 0.20, 0.40);
  v.swell_drag_coeff = scaled(reference.swell_drag_coeff, 0.20, 0.40);
  v.draft_sensitivity = scaled(reference.draft_sensitivity, 0.20, 0.40);
  std::uniform_real_distribution<double> shift(0.1, 0.25);
  const double delta = std::bernoulli_distribution(0.5)(rng) ? shift(rng) : -shift(rng);
  v.rpm_exponent = reference.rpm_exponent + delta;
  // Keep the propulsion power at the design rpm equal to the perturbed cubic
  // value so the curves differ in shape rather than only in level.
  v.power_coeff *= std::pow(reference.design_rpm, reference.rpm_exponent - v.rpm_exponent);
  return v;
}

FleetConfig default_fleet(std::uint64_t seed) {
  return make_fleet(seed, parse_date("2023-03-01"), parse_date("2023-08-15"),
                    parse_date("2024-05-01"), parse_date("2024-01-01"));
}

FleetConfig small_fleet(std::uint64_t seed) {
  FleetConfig f = make_fleet(seed, parse_date("2023-11-01"), parse_date("2023-11-20"),
                             parse_date("2024-01-20"), parse_date("2024-01-01"));
  return f;
}

FleetConfig fleet_from_json(const nlohmann::json& j, std::uint64_t default_seed) {
  const auto seed = j.value("seed", default_seed);
  const auto preset = j.value("preset", std::string("default"));
  FleetConfig fleet;
  if (preset == "default") {
    fleet = default_fleet(seed);
  } else if (preset == "small") {
    fleet = small_fleet(seed);
  } else {
    throw ConfigError(fmt::format("unknown fleet preset '{}'", preset));
  }
  try {
    if (j.contains("split_boundary")) {
      fleet.split_boundary = parse_date(j.at("split_boundary").get<std::string>());
    }
    if (j.contains("vessels")) {
      fleet.vessels.clear();
      for (const auto& v : j.at("vessels")) fleet.vessels.push_back(vessel_from_json(v));
      if (fleet.vessels.empty()) throw ConfigError("fleet has no vessels");
      UtcSeconds start = fleet.vessels.front().scenario.start, end = start;
      for (const auto& v : fleet.vessels) {
        start = std::min(start, v.scenario.start);
        end = std::max(end, v.scenario.start + v.scenario.duration_days * kSecondsPerDay);
      }
      fleet.grid.start = start;
      fleet.grid.end = end + kSecondsPerDay;
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      fleet.grid.lat_min = g.value("lat_min", fleet.grid.lat_min);
      fleet.grid.lat_max = g.value("lat_max", fleet.grid.lat_max);
      fleet.grid.lon_min = g.value("lon_min", fleet.grid.lon_min);
      fleet.grid.lon_max = g.value("lon_max", fleet.grid.lon_max);
      fleet.grid.spacing_deg = g.value("spacing_deg", fleet.grid.spacing_deg);
      fleet.grid.time_step_s = g.value("time_step_s", fleet.grid.time_step_s);
      fleet.grid.mean_wave_height_m = g.value("mean_wave_height_m", fleet.grid.mean_wave_height_m);
      fleet.grid.mean_swell_height_m = g.value("mean_swell_height_m", fleet.grid.mean_swell_height_m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed fleet configuration: {}", e.what()));
  } catch (const DataError& e) {
    throw ConfigError(fmt::format("malformed fleet configuration: {}", e.what()));
  }
  return fleet;
}

nlohmann::ordered_json fleet_to_json(const FleetConfig& fleet) {
  nlohmann::ordered_json j;
  j["seed"] = fleet.seed;
  j["split_boundary"] = format_date(fleet.split_boundary);
  auto& g = j["grid"];
  g["lat_min"] = fleet.grid.lat_min;
  g["lat_max"] = fleet.grid.lat_max;
  g["lon_min"] = fleet.grid.lon_min;
  g["lon_max"] = fleet.grid.lon_max;
  g["spacing_deg"] = fleet.grid.spacing_deg;
  g["time_step_s"] = fleet.grid.time_step_s;
  g["start"] = format_iso8601(fleet.grid.start);
  g["end"] = format_iso8601(fleet.grid.end);
  g["mean_wave_height_m"] = fleet.grid.mean_wave_height_m;
  g["mean_swell_height_m"] = fleet.grid.mean_swell_height_m;
  auto& vessels = j["vessels"];
  vessels = nlohmann::ordered_json::array();
  for (const auto& v : fleet.vessels) vessels.push_back(vessel_to_json(v));
  return j;
}

void write_fleet(const std::string& dir, const FleetConfig& fleet) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root / "sensor");
  fs::create_directories(root / "noon");

  const auto grid = generate_weather_grid(fleet.grid, fleet.seed);
  weather::save_grid((root / "weather_grid.json").string(), grid);

  nlohmann::ordered_json index;
  index["split_boundary"] = format_date(fleet.split_boundary);
  index["weather_grid"] = "weather_grid.json";
  index["sensor_dir"] = "sensor";
  index["noon_dir"] = "noon";
  auto& vessels = index["vessels"];
  vessels = nlohmann::ordered_json::array();
  for (const auto& v : fleet.vessels) {
    auto stream = gen_sensor_stream(v.spec, v.scenario, grid);
    const auto noon = gen_noon_reports(stream, v.spec, v.scenario.seed + 7919,
                                       v.scenario.sample_interval_s);
    // Raw sensor files carry no weather; fusion re-attaches it from the grid.
    for (auto& r : stream) {
      r.wave_height_m.reset();
      r.swell_height_m.reset();
      r.wave_dir_rel_deg.reset();
      r.wind_dir_rel_deg.reset();
    }
    data::write_sensor_csv((root / "sensor" / (v.spec.vessel_id + ".csv")).string(), stream);
    data::write_noon_csv((root / "noon" / (v.spec.vessel_id + ".csv")).string(), noon);
    vessels.push_back({{"vessel_id", v.spec.vessel_id},
                       {"category", data::to_string(v.spec.category)},
                       {"length_m", v.spec.length_m},
                       {"beam_m", v.spec.beam_m}});
  }
  auto write_json = [](const fs::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << j.dump(2) << '\n';
  };
  write_json(root / "fleet.json", index);
  nlohmann::ordered_json manifest;
  manifest["generator"] = "shaftpower synthetic fleet";
  manifest["fleet"] = fleet_to_json(fleet);
  write_json(root / "manifest.json", manifest);
}

}  // namespace shaftpower::synth
