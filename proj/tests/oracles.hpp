// Independent reference implementations used by the unit and acceptance tests.
// Written with plain loops so they share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "shaftpower/mlp.hpp"

namespace oracle {

inline double forward_loop(const shaftpower::nn::MlpParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto& w = p.weights[l];
    std::vector<double> z(static_cast<std::size_t>(w.rows()), 0.0);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = p.biases[l](i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = s;
    }
    if (l + 1 < p.weights.size()) {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
    }
    a = z;
  }
  return a[0];
}

/// Smallest |pre-activation| over the hidden layers, to keep finite
/// differences away from ReLU kinks.
inline double min_hidden_margin(const shaftpower::nn::MlpParams& p, const std::vector<double>& x) {
  double margin = INFINITY;
  std::vector<double> a = x;
  for (std::size_t l = 0; l + 1 < p.weights.size(); ++l) {
    const auto& w = p.weights[l];
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = p.biases[l](i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      margin = std::min(margin, std::abs(s));
      z[static_cast<std::size_t>(i)] = s > 0.0 ? s : 0.0;
    }
    a = z;
  }
  return margin;
}

inline double mae(const std::vector<double>& y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - f[i]);
  return s / static_cast<double>(y.size());
}

inline double nmae_range(const std::vector<double>& y, const std::vector<double>& f) {
  double lo = y[0], hi = y[0];
  for (double v : y) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return mae(y, f) / (hi - lo);
}

inline double mape(const std::vector<double>& y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs((y[i] - f[i]) / y[i]);
  return 100.0 * s / static_cast<double>(y.size());
}

inline double r2(const std::vector<double>& y, const std::vector<double>& f) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res += (y[i] - f[i]) * (y[i] - f[i]);
    tot += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 - res / tot;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

/// Central-difference gradient of |target - f(x)| with respect to every
/// parameter, laid out layer by layer as (weights row-major, then biases).
inline std::vector<double> numeric_gradient(shaftpower::nn::MlpParams p, const std::vector<double>& x,
                                            double target, double h) {
  std::vector<double> g;
  auto loss = [&] { return std::fabs(target - forward_loop(p, x)); };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
        const double keep = p.weights[l](i, j);
        p.weights[l](i, j) = keep + h;
        const double up = loss();
        p.weights[l](i, j) = keep - h;
        const double down = loss();
        p.weights[l](i, j) = keep;
        g.push_back((up - down) / (2.0 * h));
      }
    }
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
      const double keep = p.biases[l](i);
      p.biases[l](i) = keep + h;
      const double up = loss();
      p.biases[l](i) = keep - h;
      const double down = loss();
      p.biases[l](i) = keep;
      g.push_back((up - down) / (2.0 * h));
    }
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("shaftpower_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
