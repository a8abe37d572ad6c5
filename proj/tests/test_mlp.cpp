#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "shaftpower/errors.hpp"
#include "shaftpower/mlp.hpp"

using namespace shaftpower;
using nn::MlpParams;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

MlpParams random_params(const std::vector<int>& dims, std::uint64_t seed) {
  auto p = nn::init_params(dims, seed);
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> g(0.0, 0.3);
  for (auto& b : p.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
  }
  return p;
}

std::vector<double> flatten(const nn::Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
    for (Eigen::Index i = 0; i < g.d_weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < g.d_weights[l].cols(); ++j) out.push_back(g.d_weights[l](i, j));
    }
    for (Eigen::Index i = 0; i < g.d_biases[l].size(); ++i) out.push_back(g.d_biases[l](i));
  }
  return out;
}

}  // namespace

TEST(Init, ShapesOfDefaultArchitecture) {
  const auto p = nn::init_params(nn::kDefaultArchitecture, 1);
  const std::vector<std::pair<int, int>> shapes{{128, 7}, {64, 128}, {32, 64}, {1, 32}};
  ASSERT_EQ(p.num_layers(), 4u);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(p.weights[l].rows(), shapes[l].first);
    EXPECT_EQ(p.weights[l].cols(), shapes[l].second);
    EXPECT_EQ(p.biases[l].size(), shapes[l].first);
  }
}

TEST(Init, DeterministicZeroBiasGlorotBounds) {
  const std::vector<int> dims{2, 3, 1};
  const auto a = nn::init_params(dims, 42);
  const auto b = nn::init_params(dims, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, nn::init_params(dims, 43));
  for (const auto& bias : a.biases) EXPECT_TRUE((bias.array() == 0.0).all());
  const auto big = nn::init_params(nn::kDefaultArchitecture, 5);
  for (std::size_t l = 0; l < big.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / (big.layer_dims[l] + big.layer_dims[l + 1]));
    EXPECT_LE(big.weights[l].cwiseAbs().maxCoeff(), bound);
  }
}

TEST(Init, RejectsDegenerateDims) {
  EXPECT_THROW(nn::init_params(std::vector<int>{}, 0), ConfigError);
  EXPECT_THROW(nn::init_params(std::vector<int>{7}, 0), ConfigError);
  EXPECT_THROW(nn::init_params(std::vector<int>{7, 0, 1}, 0), ConfigError);
}

TEST(Forward, Examples) {
  auto zero = nn::init_params(std::vector<int>{3, 4, 1}, 0);
  for (auto& w : zero.weights) w.setZero();
  EXPECT_EQ(nn::forward(zero, std::vector<double>{1, -2, 3}).prediction, 0.0);

  auto affine = nn::init_params(std::vector<int>{2, 1}, 0);
  affine.weights[0] << 1.0, 1.0;
  affine.biases[0] << 0.5;
  EXPECT_DOUBLE_EQ(nn::forward(affine, std::vector<double>{1, 2}).prediction, 3.5);

  EXPECT_THROW(nn::forward(affine, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Forward, MatchesLoopOracleAndReluInvariant) {
  std::mt19937_64 rng(11);
  const auto small = random_params({3, 4, 1}, 9);
  const auto x = random_vec(rng, 3);
  const double small_pred = nn::forward(small, x).prediction;
  EXPECT_LE(oracle::rel_diff(small_pred, oracle::forward_loop(small, x)), 1e-12);

  const auto p = random_params(nn::kDefaultArchitecture, 3);
  for (int c = 0; c < 100; ++c) {
    const auto in = random_vec(rng, 7);
    const auto trace = nn::forward(p, in);
    EXPECT_LE(oracle::rel_diff(trace.prediction, oracle::forward_loop(p, in)), 1e-12);
    EXPECT_EQ(trace.activations.front(), Eigen::Map<const Eigen::VectorXd>(in.data(), 7));
    EXPECT_EQ(trace.prediction, trace.pre_activations.back()(0));
    for (std::size_t l = 1; l + 1 < trace.activations.size(); ++l) {
      EXPECT_GE(trace.activations[l].minCoeff(), 0.0);
    }
  }
}

TEST(Forward, BatchPredictionsAgreeWithSingleSamples) {
  std::mt19937_64 rng(2);
  const auto p = random_params({5, 8, 4, 1}, 4);
  Eigen::MatrixXd rows(6000, 5);
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = std::normal_distribution<>(0, 1)(rng);
  const Eigen::VectorXd pred = nn::predict_rows(p, rows);
  for (Eigen::Index i = 0; i < rows.rows(); i += 997) {
    std::vector<double> x(5);
    for (int j = 0; j < 5; ++j) x[static_cast<std::size_t>(j)] = rows(i, j);
    EXPECT_NEAR(pred(i), oracle::forward_loop(p, x), 1e-12 * (1.0 + std::fabs(pred(i))));
  }
}

TEST(MaeLoss, Examples) {
  EXPECT_EQ(nn::mae_loss(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_EQ(nn::mae_loss(std::vector<double>{0, 0}, std::vector<double>{1, -1}), 1.0);
  std::mt19937_64 rng(5);
  const auto a = random_vec(rng, 100), b = random_vec(rng, 100);
  EXPECT_LE(oracle::rel_diff(nn::mae_loss(a, b), oracle::mae(b, a)), 1e-12);
  EXPECT_THROW(nn::mae_loss(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Backward, ExactFitGivesZeroGradient) {
  const auto p = random_params({3, 5, 1}, 1);
  const std::vector<double> x{0.3, -0.2, 0.9};
  const auto trace = nn::forward(p, x);
  const auto g = nn::backward(p, trace, trace.prediction);
  for (double v : flatten(g)) EXPECT_EQ(v, 0.0);
}

TEST(Backward, OutputBiasGradientIsErrorSign) {
  const auto p = random_params({3, 5, 1}, 2);
  const std::vector<double> x{0.3, -0.2, 0.9};
  const auto trace = nn::forward(p, x);
  EXPECT_EQ(nn::backward(p, trace, trace.prediction - 1.0).d_biases.back()(0), 1.0);
  EXPECT_EQ(nn::backward(p, trace, trace.prediction + 1.0).d_biases.back()(0), -1.0);
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> width(1, 8);
  int checked = 0;
  for (int net = 0; net < 20; ++net) {
    std::vector<int> dims{width(rng) % 7 + 1, width(rng) * 2, width(rng), 1};
    const auto p = random_params(dims, 100 + static_cast<std::uint64_t>(net));
    std::vector<double> x;
    double target = 0.0;
    do {
      x = random_vec(rng, dims[0]);
      target = std::normal_distribution<double>(0.0, 1.0)(rng);
    } while (oracle::min_hidden_margin(p, x) < 1e-3 ||
             std::fabs(target - oracle::forward_loop(p, x)) < 1e-3);
    const auto analytic = flatten(nn::backward(p, nn::forward(p, x), target));
    const auto numeric = oracle::numeric_gradient(p, x, target, 1e-5);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      if (analytic[i] == 0.0 && numeric[i] == 0.0) continue;
      EXPECT_LT(std::fabs(analytic[i] - numeric[i]) / std::max(std::fabs(numeric[i]), 1e-6), 1e-4)
          << "net " << net << " parameter " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Backward, BatchGradientIsMeanOfSampleGradients) {
  std::mt19937_64 rng(8);
  const auto p = random_params({4, 6, 3, 1}, 8);
  Eigen::MatrixXd x(4, 9);
  Eigen::RowVectorXd y(9);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::normal_distribution<>(0, 1)(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::normal_distribution<>(0, 1)(rng);
  double loss = 0.0;
  const auto batch = flatten(nn::batch_gradients(p, x, y, &loss));
  std::vector<double> sum(batch.size(), 0.0);
  std::vector<double> preds, targets;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> xc(x.col(c).data(), x.col(c).data() + 4);
    const auto trace = nn::forward(p, xc);
    preds.push_back(trace.prediction);
    targets.push_back(y(c));
    const auto g = flatten(nn::backward(p, trace, y(c)));
    for (std::size_t i = 0; i < g.size(); ++i) sum[i] += g[i];
  }
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_NEAR(batch[i], sum[i] / 9.0, 1e-12);
  EXPECT_NEAR(loss, oracle::mae(targets, preds), 1e-12);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  auto p = random_params({3, 4, 1}, 3);
  const auto before = p;
  auto state = nn::AdamState::for_params(p);
  const auto zeros = nn::Gradients::zeros_like(p);
  for (int i = 0; i < 10; ++i) nn::adam_step(p, zeros, state, 1e-3);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step_count, 10);
  for (const auto& v : state.v_weights) EXPECT_TRUE((v.array() == 0.0).all());
  for (const auto& m : state.m_weights) EXPECT_TRUE((m.array() == 0.0).all());
}

TEST(Adam, FirstStepClosedForm) {
  auto p = nn::init_params(std::vector<int>{1, 1}, 0);
  p.weights[0](0, 0) = 0.5;
  auto state = nn::AdamState::for_params(p);
  auto g = nn::Gradients::zeros_like(p);
  g.d_weights[0](0, 0) = 1.0;
  nn::adam_step(p, g, state, 1e-3);
  EXPECT_NEAR(p.weights[0](0, 0), 0.5 - 1e-3, 1e-6);
  EXPECT_EQ(p.biases[0](0), 0.0);
  EXPECT_EQ(state.step_count, 1);
}

TEST(Adam, DeterministicAndSecondMomentNonNegative) {
  std::mt19937_64 rng(4);
  auto p1 = random_params({3, 4, 1}, 6);
  auto p2 = p1;
  auto s1 = nn::AdamState::for_params(p1), s2 = s1;
  for (int step = 0; step < 25; ++step) {
    auto g = nn::Gradients::zeros_like(p1);
    for (auto& w : g.d_weights) {
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = std::normal_distribution<>(0, 1)(rng);
    }
    nn::adam_step(p1, g, s1, 1e-2);
    nn::adam_step(p2, g, s2, 1e-2);
  }
  EXPECT_EQ(p1, p2);
  for (const auto& v : s1.v_weights) EXPECT_GE(v.minCoeff(), 0.0);
  EXPECT_TRUE(p1.all_finite());
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  auto p = random_params({3, 4, 1}, 6);
  auto state = nn::AdamState::for_params(p);
  auto g = nn::Gradients::zeros_like(p);
  g.d_weights[0](0, 0) = 1.0;
  nn::adam_step(p, g, state, 1e-3);
  const auto p_before = p;
  const auto steps = state.step_count;
  const auto m_before = state.m_weights;
  g.d_weights[1](0, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nn::adam_step(p, g, state, 1e-3), NumericalError);
  EXPECT_EQ(p, p_before);
  EXPECT_EQ(state.step_count, steps);
  EXPECT_EQ(state.m_weights, m_before);
}

TEST(Adam, MaskedLayersAreUntouched) {
  auto p = random_params({3, 4, 4, 1}, 6);
  const auto before = p;
  auto state = nn::AdamState::for_params(p);
  auto g = nn::Gradients::zeros_like(p);
  for (auto& w : g.d_weights) w.setOnes();
  for (auto& b : g.d_biases) b.setOnes();
  const auto mask = nn::FreezeMask::head_only(p.num_layers());
  EXPECT_EQ(mask.trainable, (std::vector<bool>{false, false, true}));
  nn::adam_step(p, g, state, 1e-3, &mask);
  EXPECT_EQ(p.weights[0], before.weights[0]);
  EXPECT_EQ(p.biases[1], before.biases[1]);
  EXPECT_NE(p.weights[2], before.weights[2]);
}
