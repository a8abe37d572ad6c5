#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shaftpower/records.hpp"
#include "shaftpower/timeutil.hpp"

namespace shaftpower::features {

/// Column names of the 7-wide design matrix, in order.
inline const std::vector<std::string> kFeatureNames = {
    "stw_knots",     "rpm",            "draft_mid_m",     "wave_height_m",
    "swell_height_m", "wave_dir_rel_deg", "wind_dir_rel_deg"};

/// Column names when relative directions are encoded as (sin, cos) pairs.
inline const std::vector<std::string> kEncodedFeatureNames = {
    "stw_knots",        "rpm",              "draft_mid_m",      "wave_height_m", "swell_height_m",
    "wave_dir_rel_sin", "wave_dir_rel_cos", "wind_dir_rel_sin", "wind_dir_rel_cos"};

/// Z-score statistics fitted on a training set. Targets are scaled as well,
/// so one network output unit corresponds to `target_std` kW; `target_mean`
/// is 0 when targets were only scaled.
struct Standardization {
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  double target_mean = 0.0;
  double target_std = 1.0;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct FeatureMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd rows;      ///< n x columns.size()
  Eigen::VectorXd targets;   ///< shaft power; kW unless standardized
  std::vector<UtcSeconds> timestamps;
  bool standardized = false;
  Standardization stats;     ///< meaningful only when standardized

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index width() const { return rows.cols(); }
};

struct FeatureReject {
  std::size_t index = 0;  ///< position in the input record list
  std::string reason;     ///< name of the missing field
};

struct FeatureBuild {
  FeatureMatrix matrix;
  std::vector<FeatureReject> rejects;
};

struct FeatureOptions {
  /// Replace the two relative-direction columns by (sin, cos) pairs.
  bool encode_directions = false;
};

FeatureBuild build_features(std::span<const data::SensorRecord> records,
                            const FeatureOptions& options = {});
FeatureBuild build_features(std::span<const data::NoonReport> records,
                            const FeatureOptions& options = {});

/// Sample Pearson correlation. Throws DataError when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  std::string feature;
  double r = 0.0;
};

/// Pearson r of every column against the targets. Diagnostic only.
std::vector<Correlation> correlation_report(const FeatureMatrix& matrix);
void write_correlation_csv(const std::string& path, std::span<const Correlation> report);

/// Fits population mean/std per column (and for the targets) and applies them.
/// Throws ConfigError naming the column when its variance is zero. With
/// `center_targets` false the targets are only divided by their std, so a
/// proportional change in power is a proportional change of the output layer.
FeatureMatrix standardize(const FeatureMatrix& matrix, bool center_targets = true);

/// (x - mean) / std using previously fitted statistics; never refits.
FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const Standardization& stats);

/// Inverse of apply_standardization on the feature columns.
Eigen::MatrixXd invert_standardization(const Eigen::MatrixXd& rows, const Standardization& stats);

/// Maps network outputs in standardized target units back to kW.
Eigen::VectorXd unscale_targets(const Eigen::VectorXd& scaled, const Standardization& stats);

}  // namespace shaftpower::features
