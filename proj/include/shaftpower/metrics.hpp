#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shaftpower::metrics {

/// Denominator used to normalize MAE.
enum class NmaeDenominator {
  kRange,  ///< max(y) - min(y)
  kMean,   ///< mean(y)
};

struct MetricsReport {
  double mae = 0.0;   ///< kW
  double nmae = 0.0;  ///< dimensionless
  double mape = 0.0;  ///< percent
  double r2 = 0.0;
  std::size_t n = 0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

/// Mean and population standard deviation of each metric over k repeated runs.
struct RunAggregate {
  MeanSd mae, nmae, mape, r2;
  std::size_t k = 0;
};

inline constexpr double kMapeGuard = 1e-9;

// All functions take (actual, predicted). Lengths must match and be non-zero,
// otherwise std::invalid_argument is thrown.
double mae(std::span<const double> y, std::span<const double> y_hat);
double nmae(std::span<const double> y, std::span<const double> y_hat,
            NmaeDenominator denominator = NmaeDenominator::kRange);
double mape(std::span<const double> y, std::span<const double> y_hat, double guard = kMapeGuard);
double r2(std::span<const double> y, std::span<const double> y_hat);

MetricsReport evaluate(std::span<const double> y, std::span<const double> y_hat,
                       NmaeDenominator denominator = NmaeDenominator::kRange);

MeanSd mean_sd(std::span<const double> values);
RunAggregate aggregate(std::span<const MetricsReport> reports);

}  // namespace shaftpower::metrics
