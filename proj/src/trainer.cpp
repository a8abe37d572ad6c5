#include "shaftpower/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "shaftpower/errors.hpp"

namespace shaftpower::train {

TrainConfig TrainConfig::baseline(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  return c;
}

TrainConfig TrainConfig::fine_tune(std::uint64_t seed) {
  TrainConfig c;
  c.batch_size = 16;
  c.initial_lr = 1e-4;
  c.seed = seed;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be > 0");
  if (!(scheduler_factor > 0.0 && scheduler_factor < 1.0)) {
    throw ConfigError("scheduler_factor must lie in (0, 1)");
  }
  if (scheduler_patience < 1 || early_stop_patience < 1) throw ConfigError("patience must be >= 1");
  if (!(min_lr > 0.0) || min_lr > initial_lr) throw ConfigError("min_lr must lie in (0, initial_lr]");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
}

int epochs_since_improvement(std::span<const double> history) {
  double best = std::numeric_limits<double>::infinity();
  int since = 0;
  for (double v : history) {
    if (v < best) {
      best = v;
      since = 0;
    } else {
      ++since;
    }
  }
  return since;
}

double scheduler_step(double current_lr, std::span<const double> history, double factor,
                      int patience, double min_lr) {
  const int stagnant = epochs_since_improvement(history);
  if (stagnant > 0 && stagnant % patience == 0) return std::max(current_lr * factor, min_lr);
  return current_lr;
}

bool early_stop(std::span<const double> history, int patience) {
  return !history.empty() && epochs_since_improvement(history) >= patience;
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, int patience, double min_lr)
    : lr_(initial_lr),
      factor_(factor),
      patience_(patience),
      min_lr_(min_lr),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::step(double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ == patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    bad_epochs_ = 0;
  }
  return lr_;
}

double evaluate_loss(const nn::MlpParams& params, const Eigen::MatrixXd& rows,
                     const Eigen::VectorXd& targets) {
  const Eigen::VectorXd pred = nn::predict_rows(params, rows);
  return (pred - targets).cwiseAbs().mean();
}

TrainResult train(const nn::MlpParams& params, const features::FeatureMatrix& data,
                  const TrainConfig& config, const nn::FreezeMask& mask) {
  config.validate();
  const Eigen::Index n = data.size();
  if (n == 0) throw ConfigError("training data is empty");
  if (data.width() != params.input_dim()) {
    throw ConfigError(fmt::format("data has {} features, network expects {}", data.width(),
                                  params.input_dim()));
  }
  if (n < config.batch_size) {
    throw ConfigError(fmt::format("{} rows is fewer than the batch size {}", n, config.batch_size));
  }
  if (mask.trainable.size() != params.num_layers()) {
    throw ConfigError("freeze mask length does not match the number of layers");
  }
  const auto n_val = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * config.validation_fraction)));
  const Eigen::Index n_train = n - n_val;
  if (n_train < 1) throw ConfigError("no rows left for training after the validation holdout");

  const Eigen::MatrixXd train_cols = data.rows.topRows(n_train).transpose();
  const Eigen::RowVectorXd train_y = data.targets.head(n_train).transpose();
  const Eigen::MatrixXd val_rows = data.rows.bottomRows(n_val);
  const Eigen::VectorXd val_y = data.targets.tail(n_val);

  TrainResult result{params, {}};
  auto& report = result.report;
  report.train_rows = static_cast<std::size_t>(n_train);
  report.val_rows = static_cast<std::size_t>(n_val);

  nn::MlpParams current = params;
  nn::AdamState adam = nn::AdamState::for_params(current);
  PlateauScheduler scheduler(config.initial_lr, config.scheduler_factor, config.scheduler_patience,
                             config.min_lr);
  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = scheduler.lr();
    report.lr_history.push_back(lr);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(start + len));
      const Eigen::MatrixXd xb = train_cols(Eigen::all, idx);
      const Eigen::RowVectorXd yb = train_y(idx);
      double batch_loss = 0.0;
      const nn::Gradients grads = nn::batch_gradients(current, xb, yb, &batch_loss);
      loss_sum += batch_loss * static_cast<double>(len);
      try {
        nn::adam_step(current, grads, adam, lr, &mask);
      } catch (const NumericalError& e) {
        throw NumericalError(fmt::format("epoch {}: {}", epoch, e.what()));
      }
    }
    const double train_loss = loss_sum / static_cast<double>(n_train);
    const double val_loss = evaluate_loss(current, val_rows, val_y);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericalError(fmt::format("epoch {}: non-finite loss", epoch));
    }
    report.train_loss_history.push_back(train_loss);
    report.val_loss_history.push_back(val_loss);
    if (val_loss < best) {
      best = val_loss;
      result.params = current;
      report.best_epoch = epoch;
      report.best_val_loss = val_loss;
    }
    scheduler.step(val_loss);
    if (early_stop(report.val_loss_history, config.early_stop_patience)) {
      report.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

TrainResult fine_tune(const nn::MlpParams& pretrained, const features::FeatureMatrix& noon_data,
                      const TrainConfig& config) {
  if (noon_data.size() == 0) throw ConfigError("fine-tuning data is empty");
  if (noon_data.width() != pretrained.input_dim()) {
    throw ConfigError(fmt::format("noon features have width {}, pretrained network expects {}",
                                  noon_data.width(), pretrained.input_dim()));
  }
  nn::MlpParams start = pretrained;
  if (config.reinit_head) {
    const auto last = start.num_layers() - 1;
    const int dims[] = {start.layer_dims[last], start.layer_dims[last + 1]};
    const nn::MlpParams head = nn::init_params(dims, config.seed ^ 0x9e3779b97f4a7c15ULL);
    start.weights[last] = head.weights[0];
    start.biases[last] = head.biases[0];
  }
  return train(start, noon_data, config, nn::FreezeMask::head_only(start.num_layers()));
}

std::string report_to_json(const TrainReport& report) {
  nlohmann::ordered_json j;
  j["best_epoch"] = report.best_epoch;
  j["best_val_loss"] = report.best_val_loss;
  j["stopped_early"] = report.stopped_early;
  j["train_rows"] = report.train_rows;
  j["val_rows"] = report.val_rows;
  j["lr_history"] = report.lr_history;
  j["train_loss_history"] = report.train_loss_history;
  j["val_loss_history"] = report.val_loss_history;
  return j.dump(1) + "\n";
}

}  // namespace shaftpower::train
