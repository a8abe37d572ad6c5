#include "shaftpower/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace shaftpower::metrics {
namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw std::invalid_argument("metric over empty input");
  if (y.size() != y_hat.size()) {
    throw std::invalid_argument(
        fmt::format("metric length mismatch: {} actual vs {} predicted", y.size(), y_hat.size()));
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double nmae(std::span<const double> y, std::span<const double> y_hat,
            NmaeDenominator denominator) {
  check_pair(y, y_hat);
  double scale = 0.0;
  if (denominator == NmaeDenominator::kRange) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    scale = *hi - *lo;
    if (!(scale > 0.0)) throw std::invalid_argument("NMAE undefined: target range is zero");
  } else {
    scale = mean_of(y);
    if (scale == 0.0) throw std::invalid_argument("NMAE undefined: target mean is zero");
  }
  return mae(y, y_hat) / scale;
}

double mape(std::span<const double> y, std::span<const double> y_hat, double guard) {
  check_pair(y, y_hat);
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(std::abs(y[i]) >= guard)) bad.push_back(i);
  }
  if (!bad.empty()) {
    throw std::invalid_argument(
        fmt::format("MAPE undefined: |y| below {} at indices [{}]", guard, fmt::join(bad, ", ")));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs((y[i] - y_hat[i]) / y[i]);
  return 100.0 * s / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const double y_bar = mean_of(y);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - y_bar) * (y[i] - y_bar);
  }
  if (!(ss_tot > 0.0)) throw std::invalid_argument("R^2 undefined: targets are constant");
  return 1.0 - ss_res / ss_tot;
}

MetricsReport evaluate(std::span<const double> y, std::span<const double> y_hat,
                       NmaeDenominator denominator) {
  return {mae(y, y_hat), nmae(y, y_hat, denominator), mape(y, y_hat), r2(y, y_hat), y.size()};
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean/sd of empty list");
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(values.size()))};
}

RunAggregate aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate over zero runs");
  auto column = [&](auto member) {
    std::vector<double> v;
    v.reserve(reports.size());
    for (const auto& r : reports) v.push_back(r.*member);
    return mean_sd(v);
  };
  return {column(&MetricsReport::mae), column(&MetricsReport::nmae),
          column(&MetricsReport::mape), column(&MetricsReport::r2), reports.size()};
}

}  // namespace shaftpower::metrics
