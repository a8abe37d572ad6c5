#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shaftpower/checkpoint.hpp"
#include "shaftpower/features.hpp"
#include "shaftpower/metrics.hpp"
#include "shaftpower/records.hpp"
#include "shaftpower/trainer.hpp"
#include "shaftpower/weather.hpp"

namespace shaftpower::experiment {

/// Contents of `<data-dir>/fleet.json`.
struct FleetIndex {
  data::SplitSpec split;
  std::string weather_grid = "weather_grid.json";
  std::string sensor_dir = "sensor";
  std::string noon_dir = "noon";
  std::vector<data::VesselMeta> vessels;
};

FleetIndex load_fleet_index(const std::string& data_dir);

struct ExperimentConfig {
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string base_vessel = "auto";  ///< "auto" selects by sensor-test MAPE
  std::vector<std::string> vessels;  ///< empty means every vessel in the fleet
  std::vector<int> hidden_layers = {128, 64, 32};

  train::TrainConfig baseline = train::TrainConfig::baseline();
  train::TrainConfig finetune = train::TrainConfig::fine_tune();
  /// From-scratch noon models: baseline recipe with the noon batch size.
  train::TrainConfig scratch = [] {
    auto c = train::TrainConfig::baseline();
    c.batch_size = 16;
    return c;
  }();

  /// Target centering per arm. The base model is scaled without centering so
  /// its fine-tuned head can absorb proportional power differences.
  bool baseline_center_targets = false;
  bool scratch_center_targets = true;

  bool reinit_head = false;
  bool encode_directions = false;
  metrics::NmaeDenominator nmae_denominator = metrics::NmaeDenominator::kRange;
  bool sensor_outlier_cut = true;
  int threads = 1;
};

/// Applies the keys present in `j` on top of `base`. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

/// Design matrices for one vessel after ingestion, fusion, filtering and the
/// temporal split. Features are in raw units.
struct VesselDataset {
  data::VesselMeta meta;
  features::FeatureMatrix sensor_train, sensor_test;
  features::FeatureMatrix noon_train, noon_test;
  std::size_t sensor_rows_read = 0, sensor_rows_rejected = 0, fuse_rejects = 0;
  std::size_t noon_rows_read = 0, noon_rows_rejected = 0;
  data::DropReport sensor_drops, noon_drops;
};

/// Loads and prepares one vessel. `grid` is required for the sensor side;
/// pass nullptr to prepare noon data only.
VesselDataset prepare_vessel(const std::string& data_dir, const FleetIndex& index,
                             const data::VesselMeta& meta, const weather::WeatherGrid* grid,
                             const ExperimentConfig& config);

struct TrainedModel {
  Checkpoint checkpoint;
  train::TrainReport report;
};

/// Fits standardization on `train_raw`, initializes a fresh network and trains it.
TrainedModel train_from_scratch(const features::FeatureMatrix& train_raw,
                                const train::TrainConfig& config,
                                const std::vector<int>& hidden_layers, bool encode_directions,
                                bool center_targets, const std::string& tag);

/// Expresses `train_raw` in the base model's scaling and fine-tunes its head.
TrainedModel train_transfer(const Checkpoint& base, const features::FeatureMatrix& train_raw,
                            const train::TrainConfig& config, const std::string& tag);

/// Predictions in kW for raw (unstandardized) features.
Eigen::VectorXd predict_kw(const Checkpoint& model, const features::FeatureMatrix& raw);

metrics::MetricsReport evaluate_model(const Checkpoint& model, const features::FeatureMatrix& raw,
                                      metrics::NmaeDenominator denominator);

struct VesselScore {
  std::string vessel_id;
  metrics::MetricsReport sensor;  ///< sensor-test metrics of the vessel's own model
};

/// Minimum sensor-test MAPE; ties go to lower NMAE, then the smaller id.
std::string select_base_vessel(const std::vector<VesselScore>& scores);

/// FNV-1a over the bytes of a design matrix and its targets.
std::uint64_t matrix_checksum(const features::FeatureMatrix& m);

struct VesselOutcome {
  data::VesselMeta meta;
  std::vector<metrics::MetricsReport> sensor;        ///< one per seed
  std::vector<metrics::MetricsReport> noon_scratch;  ///< one per seed
  std::vector<metrics::MetricsReport> noon_tl;       ///< empty for the base vessel
};

struct ExperimentResult {
  std::string base_vessel;
  std::vector<std::uint64_t> seeds;
  std::vector<VesselOutcome> vessels;
};

/// The full protocol: per-seed sensor and from-scratch noon models for every
/// vessel, base selection, fine-tuning of the base model on every other
/// vessel's noon data, and mean/SD aggregation. Writes tables/, plots/,
/// checkpoints/ and manifest.json under config.out_dir. Failures are rethrown
/// with the stage (and seed) prefixed, after marking the manifest incomplete.
ExperimentResult run_full_experiment(const ExperimentConfig& config);

/// Seed used for one training run, derived from the protocol seed.
std::uint64_t run_seed(std::uint64_t seed, std::size_t vessel_index, int arm);

}  // namespace shaftpower::experiment
