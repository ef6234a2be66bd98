// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "favf/models.hpp"

namespace favf::nnet {

struct LstmConfig {
  int layers = 3;
  int hidden = 32;
  int input_width = 1;  // 1 + number of factors
  int window = 7;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  int patience = 20;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  void validate() const;
  LstmConfig& with_seed(std::uint64_t s) {
    seed = s;
    seed_set = true;
    return *this;
  }
};

/// All weights live in one flat vector. Per layer, gate blocks are stacked
/// in the order input, forget, output, candidate:
///   W (4H x in), U (4H x H), b (4H)
/// followed by the dense head w (H) and its bias.
class LstmParams {
 public:
  LstmParams() = default;
  LstmParams(int layers, int hidden, int input_width);

  int layers() const { return layers_; }
  int hidden() const { return hidden_; }
  int input_width() const { return input_width_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  int layer_input(int l) const { return l == 0 ? input_width_ : hidden_; }
  Eigen::Map<Eigen::MatrixXd> W(int l);
  Eigen::Map<Eigen::MatrixXd> U(int l);
  Eigen::Map<Eigen::VectorXd> b(int l);
  Eigen::Map<Eigen::VectorXd> dense_w();
  double& dense_b();
  Eigen::Map<const Eigen::MatrixXd> W(int l) const;
  Eigen::Map<const Eigen::MatrixXd> U(int l) const;
  Eigen::Map<const Eigen::VectorXd> b(int l) const;
  Eigen::Map<const Eigen::VectorXd> dense_w() const;
  double dense_b() const;

  std::size_t offset_W(int l) const;
  std::size_t offset_U(int l) const;
  std::size_t offset_b(int l) const;
  std::size_t offset_dense() const;

  /// Uniform in +-1/sqrt(fan_in) with forget-gate biases set to 1.
  static LstmParams initialize(const LstmConfig& config);

  friend bool operator==(const LstmParams& a, const LstmParams& b) {
    return a.layers_ == b.layers_ && a.hidden_ == b.hidden_ && a.input_width_ == b.input_width_ &&
           a.values_ == b.values_;
  }

 private:
  int layers_ = 0;
  int hidden_ = 0;
  int input_width_ = 0;
  Eigen::VectorXd values_;
};

/// Prediction for one sequence (window x input_width).
double forward(const LstmParams& params, const Eigen::MatrixXd& sequence);

/// Adds d(loss)/d(params) to `grad` for loss = scale * (prediction - target)^2
/// and returns the prediction.
double accumulate_gradient(const LstmParams& params, const Eigen::MatrixXd& sequence, double target, double scale,
                           Eigen::VectorXd& grad);

/// Max relative error |analytic - central difference| / max(|analytic| + |cd|, floor)
/// over `count` parameters sampled without replacement (all if fewer). The
/// floor keeps components near 1e-9, where the difference quotient is
/// dominated by rounding, from swamping the maximum; pass 0 to disable it.
double gradient_check(const LstmParams& params, const Eigen::MatrixXd& sequence, double target, std::uint64_t seed,
                      std::size_t count = 200, double step = 1e-4, double floor = 1e-7);

/// Per-feature affine scaling fitted on training data.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  double target_mean = 0.0;
  double target_scale = 1.0;

  static Standardizer fit(std::span<const Eigen::MatrixXd> inputs, std::span<const double> targets);
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd destandardize(const Eigen::MatrixXd& z) const;
  double standardize_target(double y) const { return (y - target_mean) / target_scale; }
  double destandardize_target(double z) const { return z * target_scale + target_mean; }
};

struct Dataset {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<double> targets;
  std::vector<Date> origins;

  std::size_t size() const { return targets.size(); }
};

struct TrainingHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = -1;
};

struct TrainedModel {
  LstmParams params;
  Standardizer standardizer;
  TrainingHistory history;

  double predict(const Eigen::MatrixXd& raw_sequence) const;
};

/// Mini-batch Adam on MSE with early stopping on the trailing validation
/// slice of `train`. Inputs are raw; standardization is fitted here.
TrainedModel train(const LstmConfig& config, const Dataset& train);

/// Splits by time at floor(0.8 n); training samples whose targets overlap
/// the test period (origin > split origin - h) are dropped.
std::pair<Dataset, Dataset> split_80_20(const Dataset& all, int horizon);

/// Sequences of (RV_s, f_{1,s}..f_{S,s}) for s = t-window+1..t with target Y_{t+h}.
Dataset make_dataset(const ingest::VolPanel& panel, std::size_t asset, const factors::FactorPath* path, int S,
                     int horizon, int window = 7);

/// Trains on the first 80% of origins and forecasts the remaining 20%.
models::ForecastSeries lstm_run(const ingest::VolPanel& panel, std::size_t asset, const models::FactorConfig& factors,
                                int horizon, const LstmConfig& config, const factors::FactorPath* path = nullptr,
                                TrainedModel* trained = nullptr);

/// Forecasts the test split with an already trained model.
models::ForecastSeries lstm_forecast(const ingest::VolPanel& panel, std::size_t asset,
                                     const models::FactorConfig& factors, int horizon, const TrainedModel& model,
                                     const factors::FactorPath* path = nullptr);

/// Binary layout: "FAVFLSTM", little-endian u64 header length, JSON header,
/// then the parameter vector as little-endian IEEE-754 doubles.
void save_model(const std::filesystem::path& path, const TrainedModel& model, const LstmConfig& config);
TrainedModel load_model(const std::filesystem::path& path, LstmConfig* config = nullptr);

}  // namespace favf::nnet
