#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace shaftpower::nn {

/// Dense feedforward regressor: ReLU on every hidden layer, affine output.
///
/// Layer i maps layer_dims[i] -> layer_dims[i+1]; weights[i] has shape
/// (layer_dims[i+1], layer_dims[i]). The output layer must have width 1.
struct MlpParams {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t num_layers() const { return weights.size(); }
  int input_dim() const { return layer_dims.front(); }
  std::size_t num_parameters() const;
  bool all_finite() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Per-layer trainability flags. trainable[i] refers to weights[i]/biases[i].
struct FreezeMask {
  std::vector<bool> trainable;

  static FreezeMask all_trainable(std::size_t layers) { return {std::vector<bool>(layers, true)}; }
  /// Everything frozen except the output layer.
  static FreezeMask head_only(std::size_t layers);
};

inline const std::vector<int> kDefaultArchitecture = {7, 128, 64, 32, 1};

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre_activations;  ///< z for layers 1..L
  std::vector<Eigen::VectorXd> activations;      ///< a[0] = input, a[i] = relu(z[i-1]) for hidden
  double prediction = 0.0;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;

  static Gradients zeros_like(const MlpParams& params);
  bool all_finite() const;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

/// Glorot-uniform weights, zero biases. The same seed always yields the same bits.
MlpParams init_params(std::span<const int> layer_dims, std::uint64_t seed);

ForwardTrace forward(const MlpParams& params, std::span<const double> x);

/// Mean absolute error; shares its implementation with metrics::mae.
double mae_loss(std::span<const double> predictions, std::span<const double> targets);

/// Gradient of the per-sample loss |target - prediction| for one traced sample.
/// sign(0) is taken as 0, so an exact fit contributes no update.
Gradients backward(const MlpParams& params, const ForwardTrace& trace, double target);

/// Predictions for a batch; `inputs` holds one sample per column.
Eigen::RowVectorXd predict_columns(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Predictions for a design matrix with one sample per row.
Eigen::VectorXd predict_rows(const MlpParams& params, const Eigen::MatrixXd& rows);

/// Mean of the per-sample gradients over a batch (one sample per column),
/// i.e. the gradient of the batch MAE. Returns the batch MAE via `loss`.
Gradients batch_gradients(const MlpParams& params, const Eigen::MatrixXd& inputs,
                          const Eigen::RowVectorXd& targets, double* loss = nullptr);

/// One bias-corrected Adam update. Layers whose mask flag is false are left
/// untouched, including their moments. Throws NumericalError, leaving params
/// and state unmodified, if any gradient entry is non-finite.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr,
               const FreezeMask* mask = nullptr);

}  // namespace shaftpower::nn
