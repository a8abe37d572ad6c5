#include "shaftpower/mlp.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "shaftpower/errors.hpp"
#include "shaftpower/metrics.hpp"

namespace shaftpower::nn {
namespace {

double sign_of(double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); }

void check_params(const MlpParams& params) {
  if (params.layer_dims.size() < 2 || params.weights.size() + 1 != params.layer_dims.size() ||
      params.biases.size() != params.weights.size()) {
    throw ShapeError("MLP parameters are inconsistent with layer_dims");
  }
}

}  // namespace

std::size_t MlpParams::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
  }
  return n;
}

bool MlpParams::all_finite() const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
  }
  return true;
}

FreezeMask FreezeMask::head_only(std::size_t layers) {
  FreezeMask mask{std::vector<bool>(layers, false)};
  if (layers > 0) mask.trainable.back() = true;
  return mask;
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    g.d_weights.push_back(Eigen::MatrixXd::Zero(params.weights[i].rows(), params.weights[i].cols()));
    g.d_biases.push_back(Eigen::VectorXd::Zero(params.biases[i].size()));
  }
  return g;
}

bool Gradients::all_finite() const {
  for (std::size_t i = 0; i < d_weights.size(); ++i) {
    if (!d_weights[i].allFinite() || !d_biases[i].allFinite()) return false;
  }
  return true;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  const auto zeros = Gradients::zeros_like(params);
  s.m_weights = s.v_weights = zeros.d_weights;
  s.m_biases = s.v_biases = zeros.d_biases;
  return s;
}

MlpParams init_params(std::span<const int> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw ConfigError("an MLP needs at least an input and an output width");
  }
  for (int w : layer_dims) {
    if (w < 1) throw ConfigError(fmt::format("layer width {} is not positive", w));
  }
  if (layer_dims.back() != 1) throw ConfigError("the output layer must have width 1");

  MlpParams p;
  p.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const int fan_in = layer_dims[i];
    const int fan_out = layer_dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

ForwardTrace forward(const MlpParams& params, std::span<const double> x) {
  check_params(params);
  if (static_cast<int>(x.size()) != params.input_dim()) {
    throw ShapeError(fmt::format("input has {} features, network expects {}", x.size(),
                                 params.input_dim()));
  }
  ForwardTrace trace;
  trace.activations.emplace_back(
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  const std::size_t layers = params.num_layers();
  for (std::size_t i = 0; i < layers; ++i) {
    Eigen::VectorXd z = params.weights[i] * trace.activations.back() + params.biases[i];
    trace.pre_activations.push_back(z);
    if (i + 1 < layers) {
      trace.activations.push_back(z.cwiseMax(0.0));
    }
  }
  trace.prediction = trace.pre_activations.back()(0);
  return trace;
}

double mae_loss(std::span<const double> predictions, std::span<const double> targets) {
  return metrics::mae(targets, predictions);
}

Gradients backward(const MlpParams& params, const ForwardTrace& trace, double target) {
  check_params(params);
  const std::size_t layers = params.num_layers();
  if (trace.pre_activations.size() != layers || trace.activations.size() != layers) {
    throw ShapeError("forward trace does not match the network depth");
  }
  Gradients g;
  g.d_weights.resize(layers);
  g.d_biases.resize(layers);
  Eigen::VectorXd delta(1);
  delta(0) = sign_of(trace.prediction - target);
  for (std::size_t i = layers; i-- > 0;) {
    g.d_weights[i] = delta * trace.activations[i].transpose();
    g.d_biases[i] = delta;
    if (i > 0) {
      const Eigen::VectorXd relu_grad =
          (trace.pre_activations[i - 1].array() > 0.0).cast<double>().matrix();
      delta = (params.weights[i].transpose() * delta).cwiseProduct(relu_grad);
    }
  }
  return g;
}

Eigen::RowVectorXd predict_columns(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_params(params);
  if (inputs.rows() != params.input_dim()) {
    throw ShapeError(fmt::format("input has {} features, network expects {}", inputs.rows(),
                                 params.input_dim()));
  }
  Eigen::MatrixXd a = inputs;
  const std::size_t layers = params.num_layers();
  for (std::size_t i = 0; i < layers; ++i) {
    Eigen::MatrixXd z = params.weights[i] * a;
    z.colwise() += params.biases[i];
    if (i + 1 < layers) {
      a = z.cwiseMax(0.0);
    } else {
      return z.row(0);
    }
  }
  return {};
}

Eigen::VectorXd predict_rows(const MlpParams& params, const Eigen::MatrixXd& rows) {
  // Chunked so large design matrices do not materialize full activation maps.
  constexpr Eigen::Index kChunk = 4096;
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index start = 0; start < rows.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, rows.rows() - start);
    out.segment(start, len) =
        predict_columns(params, rows.middleRows(start, len).transpose()).transpose();
  }
  return out;
}

Gradients batch_gradients(const MlpParams& params, const Eigen::MatrixXd& inputs,
                          const Eigen::RowVectorXd& targets, double* loss) {
  check_params(params);
  const Eigen::Index batch = inputs.cols();
  if (inputs.rows() != params.input_dim() || targets.size() != batch || batch == 0) {
    throw ShapeError("batch inputs and targets do not line up with the network");
  }
  const std::size_t layers = params.num_layers();
  std::vector<Eigen::MatrixXd> pre(layers);
  std::vector<Eigen::MatrixXd> act(layers);
  act[0] = inputs;
  for (std::size_t i = 0; i < layers; ++i) {
    pre[i].noalias() = params.weights[i] * act[i];
    pre[i].colwise() += params.biases[i];
    if (i + 1 < layers) act[i + 1] = pre[i].cwiseMax(0.0);
  }
  const Eigen::RowVectorXd err = pre.back().row(0) - targets;
  if (loss != nullptr) *loss = err.cwiseAbs().sum() / static_cast<double>(batch);

  Gradients g;
  g.d_weights.resize(layers);
  g.d_biases.resize(layers);
  Eigen::MatrixXd delta =
      err.unaryExpr([](double e) { return sign_of(e); }) / static_cast<double>(batch);
  for (std::size_t i = layers; i-- > 0;) {
    g.d_weights[i].noalias() = delta * act[i].transpose();
    g.d_biases[i] = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back;
      back.noalias() = params.weights[i].transpose() * delta;
      delta = back.cwiseProduct((pre[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr,
               const FreezeMask* mask) {
  const std::size_t layers = params.num_layers();
  if (grads.d_weights.size() != layers || grads.d_biases.size() != layers ||
      state.m_weights.size() != layers || (mask != nullptr && mask->trainable.size() != layers)) {
    throw ShapeError("Adam step: gradients, state or mask do not match the network");
  }
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!grads.all_finite()) {
    throw NumericalError("non-finite gradient entry; parameters left unchanged");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double eps = state.epsilon;

  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < layers; ++i) {
    if (mask != nullptr && !mask->trainable[i]) continue;
    update(params.weights[i], grads.d_weights[i], state.m_weights[i], state.v_weights[i]);
    update(params.biases[i], grads.d_biases[i], state.m_biases[i], state.v_biases[i]);
  }
  if (!params.all_finite()) throw NumericalError("Adam step produced non-finite parameters");
}

}  // namespace shaftpower::nn
