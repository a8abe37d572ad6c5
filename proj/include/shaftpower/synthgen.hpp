#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaftpower/records.hpp"
#include "shaftpower/timeutil.hpp"
#include "shaftpower/weather.hpp"

namespace shaftpower::synth {

/// Parametric propulsion model of one vessel plus its reporting noise.
struct VesselSpec {
  std::string vessel_id;
  data::VesselCategory category = data::VesselCategory::kSister;
  double length_m = 204.0;
  double beam_m = 32.0;

  double power_coeff = 0.0085;  ///< kW per rpm^rpm_exponent
  double rpm_exponent = 3.0;
  double wave_drag_coeff = 45.0;   ///< kW per m^2 of wave height
  double swell_drag_coeff = 30.0;  ///< kW per m^2 of swell height
  double draft_sensitivity = 0.45; ///< kW per (m * knot^2)

  double noise_sd_sensor = 60.0;  ///< kW
  double noise_sd_noon = 240.0;   ///< kW
  double report_bias = 100.0;     ///< kW added to every noon report
  double noon_outlier_prob = 0.01;  ///< chance a noon report carries a 10x typo

  // Operating profile.
  double design_rpm = 85.0;
  double speed_per_rpm = 0.165;  ///< knots per rpm in calm water
  double draft_laden_m = 10.5;
  double draft_ballast_m = 7.0;
};

/// Instantaneous conditions that determine shaft power.
struct OperatingState {
  double rpm = 0.0;
  double stw_knots = 0.0;
  double draft_mid_m = 0.0;
  double wave_height_m = 0.0;
  double swell_height_m = 0.0;
  double wave_dir_rel_deg = 0.0;
};

/// P = k*rpm^e + c_wave*H_wave^2*(1 + cos(phi_wave)) + c_swell*H_swell^2 + c_draft*d_mid*stw^2
double ground_truth_power(const VesselSpec& spec, const OperatingState& state);

/// Draws a plausible at-sea operating state (used for fleet comparisons).
OperatingState sample_operating_state(std::mt19937_64& rng);

struct VoyageScenario {
  UtcSeconds start = 0;  ///< should fall on midnight UTC
  int duration_days = 2;
  int sample_interval_s = 900;
  double leg_days_mean = 4.0;  ///< mean length of constant-setpoint legs
  double idle_leg_prob = 0.03; ///< chance a leg is spent drifting with the engine stopped
  double start_lat = 45.0;
  double start_lon = -25.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless the interval divides a day and duration >= 2 days.
  void validate() const;
};

struct GridSpec {
  double lat_min = 40.0, lat_max = 50.0;
  double lon_min = -30.0, lon_max = -20.0;
  double spacing_deg = 2.0;
  int time_step_s = 3 * 3600;
  UtcSeconds start = 0;
  UtcSeconds end = 0;
  double mean_wave_height_m = 1.8;
  double mean_swell_height_m = 1.0;
};

/// Smooth seeded wave, swell and wind fields over the GridSpec lattice.
weather::WeatherGrid generate_weather_grid(const GridSpec& spec, std::uint64_t seed);

/// One record per sample interval. Weather fields are filled from the grid
/// (the values fusion would attach) and power = ground truth + Gaussian noise.
std::vector<data::SensorRecord> gen_sensor_stream(const VesselSpec& spec,
                                                  const VoyageScenario& scenario,
                                                  const weather::WeatherGrid& grid);

/// Daily aggregation of a fused sensor stream: arithmetic means of the scalar
/// channels, circular means of the directions, and mean power plus the vessel's
/// bias and noise. Only complete calendar days are reported.
/// Throws DataError if the stream does not cover one full day.
std::vector<data::NoonReport> gen_noon_reports(std::span<const data::SensorRecord> stream,
                                               const VesselSpec& spec, std::uint64_t seed,
                                               int sample_interval_s = 900);

/// Circular mean of angles in degrees, in [0, 360).
double circular_mean_deg(std::span<const double> angles);

/// Derives a vessel from a reference design. Perturbation bands: sister <= 0.5%,
/// similar 5-10%, different 10-20% propulsion and 20-40% hull terms plus a
/// changed rpm exponent. Similar and different hulls shift every term one way.
VesselSpec derive_vessel(const VesselSpec& reference, std::string id,
                         data::VesselCategory category, std::mt19937_64& rng);

struct FleetVessel {
  VesselSpec spec;
  VoyageScenario scenario;
};

struct FleetConfig {
  std::uint64_t seed = 0;
  GridSpec grid;
  std::vector<FleetVessel> vessels;
  UtcSeconds split_boundary = 0;
};

/// Source vessel S_V1 with a long low-noise sensor history, sister targets
/// S_V2..S_V4, similar SM_V1 and different D_V1.
FleetConfig default_fleet(std::uint64_t seed);
/// Same layout with short histories, for smoke tests.
FleetConfig small_fleet(std::uint64_t seed);

/// Overrides from a JSON document (`preset`, `seed`, per-field tweaks).
FleetConfig fleet_from_json(const nlohmann::json& j, std::uint64_t default_seed);
nlohmann::ordered_json fleet_to_json(const FleetConfig& fleet);

/// Writes sensor/<id>.csv, noon/<id>.csv, weather_grid.json, fleet.json and
/// manifest.json under `dir`.
void write_fleet(const std::string& dir, const FleetConfig& fleet);

}  // namespace shaftpower::synth
