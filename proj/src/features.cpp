#include "shaftpower/features.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include <fmt/format.h>
#include <fmt/os.h>

#include "shaftpower/errors.hpp"

namespace shaftpower::features {
namespace {

/// Source fields of one design-matrix row, before direction encoding.
struct RawRow {
  double stw, rpm, draft_aft, draft_fore, wave_h, swell_h, wave_dir, wind_dir, power;
  UtcSeconds time;
};

FeatureBuild assemble(const std::vector<RawRow>& raw, std::vector<FeatureReject> rejects,
                      const FeatureOptions& options) {
  FeatureBuild out;
  out.rejects = std::move(rejects);
  auto& m = out.matrix;
  m.columns = options.encode_directions ? kEncodedFeatureNames : kFeatureNames;
  const auto n = static_cast<Eigen::Index>(raw.size());
  m.rows.resize(n, static_cast<Eigen::Index>(m.columns.size()));
  m.targets.resize(n);
  m.timestamps.reserve(raw.size());
  constexpr double kRad = std::numbers::pi / 180.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const RawRow& r = raw[static_cast<std::size_t>(i)];
    m.rows(i, 0) = r.stw;
    m.rows(i, 1) = r.rpm;
    m.rows(i, 2) = 0.5 * (r.draft_aft + r.draft_fore);
    m.rows(i, 3) = r.wave_h;
    m.rows(i, 4) = r.swell_h;
    if (options.encode_directions) {
      m.rows(i, 5) = std::sin(r.wave_dir * kRad);
      m.rows(i, 6) = std::cos(r.wave_dir * kRad);
      m.rows(i, 7) = std::sin(r.wind_dir * kRad);
      m.rows(i, 8) = std::cos(r.wind_dir * kRad);
    } else {
      m.rows(i, 5) = r.wave_dir;
      m.rows(i, 6) = r.wind_dir;
    }
    m.targets(i) = r.power;
    m.timestamps.push_back(r.time);
  }
  return out;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::pair<double, double> population_stats(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  return {mean, std::sqrt(var)};
}

}  // namespace

FeatureBuild build_features(std::span<const data::SensorRecord> records,
                            const FeatureOptions& options) {
  std::vector<RawRow> raw;
  std::vector<FeatureReject> rejects;
  raw.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::pair<const std::optional<double>*, const char*> weather[] = {
        {&r.wave_height_m, "wave_height_m"},
        {&r.swell_height_m, "swell_height_m"},
        {&r.wave_dir_rel_deg, "wave_dir_rel_deg"},
        {&r.wind_dir_rel_deg, "wind_dir_rel_deg"}};
    const char* missing = nullptr;
    for (const auto& [value, name] : weather) {
      if (!value->has_value()) {
        missing = name;
        break;
      }
    }
    if (missing != nullptr) {
      rejects.push_back({i, missing});
      continue;
    }
    raw.push_back({r.stw_knots, r.rpm, r.draft_aft_m, r.draft_fore_m, *r.wave_height_m,
                   *r.swell_height_m, *r.wave_dir_rel_deg, *r.wind_dir_rel_deg, r.shaft_power_kw,
                   r.timestamp});
  }
  return assemble(raw, std::move(rejects), options);
}

FeatureBuild build_features(std::span<const data::NoonReport> records,
                            const FeatureOptions& options) {
  std::vector<RawRow> raw;
  raw.reserve(records.size());
  for (const auto& r : records) {
    raw.push_back({r.stw_knots, r.rpm, r.draft_aft_m, r.draft_fore_m, r.wave_height_m,
                   r.swell_height_m, r.wave_dir_rel_deg, r.wind_dir_rel_deg, r.shaft_power_kw,
                   r.date});
  }
  return assemble(raw, {}, options);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least two observations");
  const double x_bar = mean_of(x);
  const double y_bar = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double dx = x[j] - x_bar;
    const double dy = y[j] - y_bar;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DataError("pearson: correlation undefined for a zero-variance input");
  }
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<Correlation> correlation_report(const FeatureMatrix& matrix) {
  std::vector<Correlation> out;
  const std::span<const double> y(matrix.targets.data(), static_cast<std::size_t>(matrix.size()));
  for (Eigen::Index c = 0; c < matrix.width(); ++c) {
    const Eigen::VectorXd col = matrix.rows.col(c);
    out.push_back({matrix.columns[static_cast<std::size_t>(c)],
                   pearson({col.data(), static_cast<std::size_t>(col.size())}, y)});
  }
  return out;
}

void write_correlation_csv(const std::string& path, std::span<const Correlation> report) {
  auto out = fmt::output_file(path);
  out.print("feature,r\n");
  for (const auto& c : report) out.print("{},{:.17g}\n", c.feature, c.r);
}

FeatureMatrix standardize(const FeatureMatrix& matrix, bool center_targets) {
  if (matrix.standardized) throw ConfigError("feature matrix is already standardized");
  if (matrix.size() < 2) throw ConfigError("standardization needs at least two rows");
  Standardization stats;
  for (Eigen::Index c = 0; c < matrix.width(); ++c) {
    const auto [mean, sd] = population_stats(matrix.rows.col(c));
    if (!(sd > 0.0)) {
      throw ConfigError(fmt::format("feature column '{}' has zero variance",
                                    matrix.columns[static_cast<std::size_t>(c)]));
    }
    stats.feature_means.push_back(mean);
    stats.feature_stds.push_back(sd);
  }
  const auto [t_mean, t_sd] = population_stats(matrix.targets);
  if (!(t_sd > 0.0)) throw ConfigError("target column 'shaft_power_kw' has zero variance");
  stats.target_mean = center_targets ? t_mean : 0.0;
  stats.target_std = t_sd;
  return apply_standardization(matrix, stats);
}

FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const Standardization& stats) {
  const auto width = static_cast<std::size_t>(matrix.width());
  if (stats.feature_means.size() != width || stats.feature_stds.size() != width) {
    throw ShapeError(fmt::format("standardization has {} columns, matrix has {}",
                                 stats.feature_means.size(), width));
  }
  for (double sd : stats.feature_stds) {
    if (!(sd > 0.0)) throw ConfigError("standardization std must be positive");
  }
  if (!(stats.target_std > 0.0)) throw ConfigError("target std must be positive");
  FeatureMatrix out = matrix;
  for (std::size_t c = 0; c < width; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    out.rows.col(col) = (matrix.rows.col(col).array() - stats.feature_means[c]) / stats.feature_stds[c];
  }
  out.targets = (matrix.targets.array() - stats.target_mean) / stats.target_std;
  out.standardized = true;
  out.stats = stats;
  return out;
}

Eigen::MatrixXd invert_standardization(const Eigen::MatrixXd& rows, const Standardization& stats) {
  if (stats.feature_means.size() != static_cast<std::size_t>(rows.cols())) {
    throw ShapeError("standardization width does not match the matrix");
  }
  Eigen::MatrixXd out = rows;
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    out.col(c) = rows.col(c).array() * stats.feature_stds[i] + stats.feature_means[i];
  }
  return out;
}

Eigen::VectorXd unscale_targets(const Eigen::VectorXd& scaled, const Standardization& stats) {
  return (scaled.array() * stats.target_std + stats.target_mean).matrix();
}

}  // namespace shaftpower::features
