#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shaftpower/errors.hpp"
#include "shaftpower/weather.hpp"

using namespace shaftpower;
using weather::WeatherGrid;

namespace {

constexpr UtcSeconds kT0 = 1'700'000'000;

/// 5 times (3 h apart) x 4 lats x 6 lons, every field filled by `f`.
template <typename F>
WeatherGrid make_grid(F f) {
  WeatherGrid g;
  for (int i = 0; i < 5; ++i) g.time_axis.push_back(kT0 + i * 10800);
  g.lat_axis = {40.0, 42.0, 44.0, 46.0};
  g.lon_axis = {-30.0, -28.0, -26.0, -24.0, -22.0, -20.0};
  for (const auto* name : {&weather::kWaveHeight, &weather::kSwellHeight, &weather::kWaveDirection,
                           &weather::kWindDirection}) {
    auto& v = g.fields[*name];
    v.resize(g.node_count());
    for (std::size_t t = 0; t < g.time_axis.size(); ++t) {
      for (std::size_t la = 0; la < g.lat_axis.size(); ++la) {
        for (std::size_t lo = 0; lo < g.lon_axis.size(); ++lo) {
          v[g.flat_index(t, la, lo)] =
              f(*name, static_cast<double>(g.time_axis[t]), g.lat_axis[la], g.lon_axis[lo]);
        }
      }
    }
  }
  return g;
}

double linear_field(double t, double lat, double lon) {
  return 2.0 * ((t - kT0) / 3600.0) + 3.0 * lat + 5.0 * lon;
}

data::SensorRecord at(double t, double lat, double lon, double course) {
  data::SensorRecord r;
  r.timestamp = static_cast<UtcSeconds>(t);
  r.lat_deg = lat;
  r.lon_deg = lon;
  r.course_deg = course;
  r.stw_knots = 12.0;
  r.rpm = 80.0;
  r.shaft_power_kw = 5000.0;
  return r;
}

}  // namespace

TEST(Trilinear, ExactAtNodes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto g = make_grid([&](const std::string&, double, double, double) { return u(rng); });
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t la = 0; la < 4; ++la) {
      for (std::size_t lo = 0; lo < 6; ++lo) {
        EXPECT_EQ(weather::trilinear(g, weather::kWaveHeight, static_cast<double>(g.time_axis[t]),
                                     g.lat_axis[la], g.lon_axis[lo]),
                  g.fields.at(weather::kWaveHeight)[g.flat_index(t, la, lo)]);
      }
    }
  }
}

TEST(Trilinear, ConstantAndLinearFields) {
  const auto c = make_grid([](const std::string&, double, double, double) { return 2.5; });
  const auto lin = make_grid([](const std::string&, double t, double la, double lo) {
    return linear_field(t, la, lo);
  });
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ut(kT0, kT0 + 4 * 10800), ula(40, 46), ulo(-30, -20);
  for (int i = 0; i < 1000; ++i) {
    const double t = ut(rng), la = ula(rng), lo = ulo(rng);
    EXPECT_NEAR(weather::trilinear(c, weather::kSwellHeight, t, la, lo), 2.5, 1e-12);
    EXPECT_NEAR(weather::trilinear(lin, weather::kWaveHeight, t, la, lo), linear_field(t, la, lo), 1e-9);
  }
}

TEST(Trilinear, ConvexCombinationOfCorners) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  const auto g = make_grid([&](const std::string&, double, double, double) { return u(rng); });
  const auto& v = g.fields.at(weather::kWaveHeight);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const std::size_t t = i % 4, la = i % 3, lo = i % 5;
    const double tq = g.time_axis[t] + frac(rng) * 10800, laq = g.lat_axis[la] + 2 * frac(rng),
                 loq = g.lon_axis[lo] + 2 * frac(rng);
    double lo_v = INFINITY, hi_v = -INFINITY;
    for (std::size_t a : {t, t + 1}) {
      for (std::size_t b : {la, la + 1}) {
        for (std::size_t c : {lo, lo + 1}) {
          lo_v = std::min(lo_v, v[g.flat_index(a, b, c)]);
          hi_v = std::max(hi_v, v[g.flat_index(a, b, c)]);
        }
      }
    }
    const double r = weather::trilinear(g, weather::kWaveHeight, tq, laq, loq);
    EXPECT_GE(r, lo_v - 1e-12);
    EXPECT_LE(r, hi_v + 1e-12);
  }
}

TEST(Trilinear, OutOfDomainNamesTheAxis) {
  const auto g = make_grid([](const std::string&, double, double, double) { return 1.0; });
  auto axis_of = [&](double t, double la, double lo) {
    try {
      weather::trilinear(g, weather::kWaveHeight, t, la, lo);
    } catch (const OutOfDomainError& e) {
      return e.axis();
    }
    return std::string("none");
  };
  EXPECT_EQ(axis_of(kT0 - 1, 41, -25), "time");
  EXPECT_EQ(axis_of(kT0 + 1, 46.01, -25), "lat");
  EXPECT_EQ(axis_of(kT0 + 1, 41, -19.9), "lon");
  EXPECT_EQ(axis_of(kT0 + 4 * 10800, 46, -20), "none");
}

TEST(Direction, InterpolationAcrossTheWrap) {
  // Alternate 359 and 1 degrees along longitude.
  const auto g = make_grid([](const std::string&, double, double, double lon) {
    return static_cast<int>(lon) % 4 == 0 ? 359.0 : 1.0;
  });
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ut(kT0, kT0 + 4 * 10800), ula(40, 46), ulo(-30, -20);
  for (int i = 0; i < 1000; ++i) {
    const double d = weather::trilinear_direction(g, weather::kWaveDirection, ut(rng), ula(rng), ulo(rng));
    EXPECT_GE(d, 0.0);
    EXPECT_LT(d, 360.0);
    EXPECT_LE(std::min(d, 360.0 - d), 2.0);
  }
}

TEST(Direction, RelativeDirection) {
  EXPECT_EQ(weather::relative_direction(90, 90), 0.0);
  EXPECT_EQ(weather::relative_direction(10, 350), 20.0);
  EXPECT_EQ(weather::relative_direction(350, 10), 340.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-720.0, 720.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double r = weather::relative_direction(a, b);
    EXPECT_GE(r, 0.0);
    EXPECT_LT(r, 360.0);
    EXPECT_EQ(weather::relative_direction(a, a), 0.0);
  }
}

TEST(Fuse, ConstantFieldsAtANode) {
  const auto g = make_grid([](const std::string& name, double, double, double) {
    return name == weather::kWaveHeight ? 2.0 : name == weather::kSwellHeight ? 1.0 : 45.0;
  });
  const std::vector<data::SensorRecord> recs{at(kT0 + 10800, 42, -26, 45)};
  const auto out = weather::fuse(recs, g);
  ASSERT_EQ(out.enriched.size(), 1u);
  EXPECT_EQ(*out.enriched[0].wave_height_m, 2.0);
  EXPECT_EQ(*out.enriched[0].swell_height_m, 1.0);
  EXPECT_NEAR(*out.enriched[0].wave_dir_rel_deg, 0.0, 1e-9);
  EXPECT_NEAR(*out.enriched[0].wind_dir_rel_deg, 0.0, 1e-9);
}

TEST(Fuse, OutOfGridRecordsAreRejectedNotDropped) {
  const auto g = make_grid([](const std::string&, double t, double la, double lo) {
    return std::fabs(linear_field(t, la, lo)) / 100.0;
  });
  const std::vector<data::SensorRecord> recs{at(kT0 + 100, 41, -25, 10), at(kT0 - 1, 41, -25, 10),
                                             at(kT0 + 200, 41.5, -24, 10)};
  const auto out = weather::fuse(recs, g);
  EXPECT_EQ(out.enriched.size(), 2u);
  ASSERT_EQ(out.rejects.size(), 1u);
  EXPECT_EQ(out.rejects[0].record.timestamp, kT0 - 1);
  EXPECT_EQ(out.enriched.size() + out.rejects.size(), recs.size());
}

TEST(Fuse, LinearFieldMatchesOracle) {
  const auto g = make_grid([](const std::string& name, double t, double la, double lo) {
    return name == weather::kSwellHeight ? linear_field(t, la, lo) + 500.0 : 1.0;
  });
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ut(kT0, kT0 + 4 * 10800), ula(40, 46), ulo(-30, -20);
  std::vector<data::SensorRecord> recs;
  for (int i = 0; i < 200; ++i) recs.push_back(at(std::floor(ut(rng)), ula(rng), ulo(rng), 0));
  const auto out = weather::fuse(recs, g);
  ASSERT_EQ(out.enriched.size(), recs.size());
  for (const auto& r : out.enriched) {
    EXPECT_NEAR(*r.swell_height_m,
                linear_field(static_cast<double>(r.timestamp), r.lat_deg, r.lon_deg) + 500.0, 1e-9);
  }
}

TEST(Fuse, MissingFieldIsAConfigError) {
  auto g = make_grid([](const std::string&, double, double, double) { return 1.0; });
  g.fields.erase(weather::kWindDirection);
  const std::vector<data::SensorRecord> recs{at(kT0, 41, -25, 0)};
  EXPECT_THROW(weather::fuse(recs, g), ConfigError);
}

TEST(GridFile, RoundTripAndErrors) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto g = make_grid([&](const std::string&, double, double, double) { return u(rng) / 3.0; });
  const auto path = (oracle::temp_dir("grid") / "grid.json").string();
  weather::save_grid(path, g);
  const auto back = weather::load_grid(path);
  EXPECT_EQ(back.lat_axis, g.lat_axis);
  EXPECT_EQ(back.time_axis, g.time_axis);
  EXPECT_EQ(back.fields, g.fields);
  EXPECT_THROW(weather::load_grid("/nonexistent/grid.json"), DataError);

  auto bad = g;
  bad.fields[weather::kWaveHeight].pop_back();
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = g;
  bad.lat_axis = {40, 39, 44, 46};
  EXPECT_THROW(bad.validate(), ConfigError);
}
