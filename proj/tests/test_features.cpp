#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "shaftpower/errors.hpp"
#include "shaftpower/features.hpp"

using namespace shaftpower;
using Vec = std::vector<double>;

namespace {

data::NoonReport example_noon() {
  data::NoonReport r;
  r.date = 19000 * kSecondsPerDay;
  r.stw_knots = 14;
  r.rpm = 80;
  r.draft_aft_m = 9;
  r.draft_fore_m = 9;
  r.wave_height_m = 2;
  r.swell_height_m = 1;
  r.wave_dir_rel_deg = 30;
  r.wind_dir_rel_deg = 60;
  r.shaft_power_kw = 6000;
  return r;
}

features::FeatureMatrix random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(5.0, 3.0);
  features::FeatureMatrix m;
  m.columns = features::kFeatureNames;
  m.rows.resize(n, 7);
  m.targets.resize(n);
  for (Eigen::Index i = 0; i < m.rows.size(); ++i) m.rows.data()[i] = g(rng);
  for (int i = 0; i < n; ++i) {
    m.targets(i) = 1000.0 + 100.0 * g(rng);
    m.timestamps.push_back(i);
  }
  return m;
}

}  // namespace

TEST(BuildFeatures, NoonFieldMapping) {
  const std::vector<data::NoonReport> rows{example_noon()};
  const auto b = features::build_features(rows);
  ASSERT_EQ(b.matrix.size(), 1);
  EXPECT_EQ(b.matrix.columns, features::kFeatureNames);
  const Eigen::RowVectorXd expect = (Eigen::RowVectorXd(7) << 14, 80, 9, 2, 1, 30, 60).finished();
  EXPECT_EQ(b.matrix.rows.row(0), expect);
  EXPECT_EQ(b.matrix.targets(0), 6000.0);
  EXPECT_EQ(b.matrix.timestamps[0], rows[0].date);
}

TEST(BuildFeatures, DraftMidAndMissingWeather) {
  data::SensorRecord r;
  r.draft_aft_m = 10;
  r.draft_fore_m = 12;
  r.wave_height_m = 1;
  r.swell_height_m = 0.5;
  r.wave_dir_rel_deg = 10;
  r.wind_dir_rel_deg = 20;
  auto missing = r;
  missing.swell_height_m.reset();
  const std::vector<data::SensorRecord> rows{r, missing};
  const auto b = features::build_features(rows);
  ASSERT_EQ(b.matrix.size(), 1);
  EXPECT_EQ(b.matrix.rows(0, 2), 11.0);
  ASSERT_EQ(b.rejects.size(), 1u);
  EXPECT_EQ(b.rejects[0].index, 1u);
  EXPECT_EQ(b.rejects[0].reason, "swell_height_m");
}

TEST(BuildFeatures, DirectionEncoding) {
  const std::vector<data::NoonReport> rows{example_noon()};
  const auto b = features::build_features(rows, {true});
  EXPECT_EQ(b.matrix.columns, features::kEncodedFeatureNames);
  EXPECT_NEAR(b.matrix.rows(0, 5), 0.5, 1e-15);
  EXPECT_NEAR(b.matrix.rows(0, 8), 0.5, 1e-15);
}

TEST(Pearson, ExamplesAndOracle) {
  const Vec x{1, 2, 3, 4}, y{2, 4, 5, 9};
  EXPECT_NEAR(features::pearson(x, y), oracle::pearson(x, y), 1e-12);
  EXPECT_NEAR(features::pearson(x, x), 1.0, 1e-12);
  EXPECT_NEAR(features::pearson(x, Vec{-1, -2, -3, -4}), -1.0, 1e-12);
  EXPECT_THROW(features::pearson(Vec{1, 1, 1}, Vec{1, 2, 3}), DataError);
  EXPECT_THROW(features::pearson(Vec{1, 2, 3}, Vec{4, 4, 4}), DataError);
}

TEST(Pearson, AffineSymmetryAndScaleProperties) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(30), y(30), ax(30), cx(30);
    const double a = g(rng), b = g(rng), c = g(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = x[i] + g(rng);
      ax[i] = a * x[i] + b;
      cx[i] = c * x[i];
    }
    EXPECT_NEAR(features::pearson(x, ax), a > 0 ? 1.0 : -1.0, 1e-9);
    EXPECT_NEAR(features::pearson(x, y), features::pearson(y, x), 1e-15);
    EXPECT_NEAR(features::pearson(cx, y), (c > 0 ? 1.0 : -1.0) * features::pearson(x, y), 1e-12);
    const double r = features::pearson(x, y);
    EXPECT_LE(std::fabs(r), 1.0);
  }
}

TEST(Correlations, ReportAndCsv) {
  const auto m = random_matrix(50, 3);
  const auto report = features::correlation_report(m);
  ASSERT_EQ(report.size(), 7u);
  EXPECT_EQ(report[1].feature, "rpm");
  const auto path = (oracle::temp_dir("corr") / "c.csv").string();
  features::write_correlation_csv(path, report);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "feature,r");
}

TEST(Standardize, TwoPointColumn) {
  features::FeatureMatrix m;
  m.columns = {"a"};
  m.rows = (Eigen::MatrixXd(2, 1) << 1, 3).finished();
  m.targets = (Eigen::VectorXd(2) << 10, 20).finished();
  m.timestamps = {0, 1};
  const auto s = features::standardize(m);
  EXPECT_EQ(s.stats.feature_means, Vec{2.0});
  EXPECT_EQ(s.stats.feature_stds, Vec{1.0});
  EXPECT_EQ(s.rows(0, 0), -1.0);
  EXPECT_EQ(s.rows(1, 0), 1.0);
  EXPECT_TRUE(s.standardized);
  EXPECT_THROW(features::standardize(s), ConfigError);
}

TEST(Standardize, TrainStatsOnTrainAndTest) {
  const auto train = random_matrix(300, 1);
  const auto test = random_matrix(100, 2);
  const auto s = features::standardize(train);
  for (Eigen::Index c = 0; c < 7; ++c) {
    EXPECT_NEAR(s.rows.col(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(s.rows.col(c).array().square().mean()), 1.0, 1e-12);
  }
  const auto t = features::apply_standardization(test, s.stats);
  double max_mean = 0.0;
  for (Eigen::Index c = 0; c < 7; ++c) max_mean = std::max(max_mean, std::fabs(t.rows.col(c).mean()));
  EXPECT_GT(max_mean, 1e-6);
  EXPECT_EQ(t.stats, s.stats);
}

TEST(Standardize, TargetCenteringIsOptional) {
  const auto m = random_matrix(100, 4);
  const auto centred = features::standardize(m);
  EXPECT_NEAR(centred.targets.mean(), 0.0, 1e-12);
  const auto scaled = features::standardize(m, false);
  EXPECT_EQ(scaled.stats.target_mean, 0.0);
  EXPECT_EQ(scaled.stats.target_std, centred.stats.target_std);
  const Eigen::VectorXd back = features::unscale_targets(scaled.targets, scaled.stats);
  EXPECT_LE((back - m.targets).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Standardize, ZeroVarianceNamesTheColumn) {
  auto m = random_matrix(20, 5);
  m.rows.col(4).setConstant(3.0);
  try {
    features::standardize(m);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("swell_height_m"), std::string::npos);
  }
}

TEST(ApplyStandardization, IdentityMeansRowAndInverse) {
  const auto m = random_matrix(40, 6);
  features::Standardization id{Vec(7, 0.0), Vec(7, 1.0), 0.0, 1.0};
  EXPECT_EQ(features::apply_standardization(m, id).rows, m.rows);

  features::Standardization stats{Vec{1, 2, 3, 4, 5, 6, 7}, Vec{2, 2, 2, 2, 2, 2, 2}, 0, 1};
  features::FeatureMatrix one;
  one.columns = features::kFeatureNames;
  one.rows = (Eigen::MatrixXd(1, 7) << 1, 2, 3, 4, 5, 6, 7).finished();
  one.targets = Eigen::VectorXd::Ones(1);
  one.timestamps = {0};
  EXPECT_TRUE((features::apply_standardization(one, stats).rows.array() == 0.0).all());

  const auto s = features::standardize(m);
  const Eigen::MatrixXd back = features::invert_standardization(s.rows, s.stats);
  EXPECT_LE(((back - m.rows).array().abs() / (1.0 + m.rows.array().abs())).maxCoeff(), 1e-12);

  features::Standardization short_stats{Vec{0, 0}, Vec{1, 1}, 0, 1};
  EXPECT_THROW(features::apply_standardization(m, short_stats), ShapeError);
}
