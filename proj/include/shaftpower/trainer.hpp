#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shaftpower/features.hpp"
#include "shaftpower/mlp.hpp"

namespace shaftpower::train {

struct TrainConfig {
  int epochs = 300;
  int batch_size = 32;
  double initial_lr = 1e-3;
  double scheduler_factor = 0.5;
  int scheduler_patience = 3;
  int early_stop_patience = 5;
  double min_lr = 1e-6;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  /// Fine-tuning only: re-initialize the trainable head instead of warm-starting it.
  bool reinit_head = false;

  /// 300 epochs, batch 32, lr 1e-3.
  static TrainConfig baseline(std::uint64_t seed = 0);
  /// As baseline but batch 16, lr 1e-4.
  static TrainConfig fine_tune(std::uint64_t seed = 0);

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct TrainReport {
  int best_epoch = 0;  ///< 1-based
  double best_val_loss = 0.0;
  std::vector<double> lr_history;  ///< learning rate used in each epoch
  std::vector<double> train_loss_history;
  std::vector<double> val_loss_history;
  bool stopped_early = false;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
};

struct TrainResult {
  nn::MlpParams params;  ///< snapshot with the lowest validation loss
  TrainReport report;
};

/// Number of trailing epochs since the last strict improvement of the best
/// loss. The first entry always counts as an improvement.
int epochs_since_improvement(std::span<const double> history);

/// Learning rate for the next epoch given the validation history up to and
/// including the current epoch. Reduces by `factor` each time the stagnation
/// run reaches a multiple of `patience`, floored at `min_lr`.
double scheduler_step(double current_lr, std::span<const double> history, double factor,
                      int patience, double min_lr);

/// True once the best loss has not strictly improved for `patience` epochs.
bool early_stop(std::span<const double> history, int patience);

/// Stateful ReduceLROnPlateau equivalent of scheduler_step.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, int patience, double min_lr);
  /// Records one validation loss and returns the learning rate for the next epoch.
  double step(double val_loss);
  double lr() const { return lr_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double min_lr_;
  double best_;
  int bad_epochs_ = 0;
};

/// Mean absolute error of `params` on a (possibly standardized) design matrix.
double evaluate_loss(const nn::MlpParams& params, const Eigen::MatrixXd& rows,
                     const Eigen::VectorXd& targets);

/// Mini-batch Adam on MAE. The chronologically last `validation_fraction` of
/// rows is held out; batches are drawn from a per-epoch seeded shuffle of the
/// remaining rows. Layers frozen by `mask` are never touched.
TrainResult train(const nn::MlpParams& params, const features::FeatureMatrix& data,
                  const TrainConfig& config, const nn::FreezeMask& mask);

/// Adapts a pretrained network to new data with every layer except the output
/// frozen. `noon_data` must already be expressed in the pretrained model's
/// feature/target scaling.
TrainResult fine_tune(const nn::MlpParams& pretrained, const features::FeatureMatrix& noon_data,
                      const TrainConfig& config);

std::string report_to_json(const TrainReport& report);

}  // namespace shaftpower::train
