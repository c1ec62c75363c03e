#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "odeaug/random.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

/// Per-channel affine normalization fitted on training data.
struct Normalization {
  std::vector<std::string> channels;
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization fit(const std::vector<TimeSeries>& series,
                           const std::vector<std::string>& channels);
  bool empty() const { return channels.empty(); }
  std::size_t index(const std::string& channel) const;
  double normalize(const std::string& channel, double v) const;
  double denormalize(const std::string& channel, double v) const;
};

struct TrainingConfig {
  double learning_rate = 5e-3;
  int max_epochs = 300;
  /// Epochs without validation improvement before stopping; 0 disables.
  int patience = 8;
  double clip_norm = 5.0;
  std::size_t chunk_length = 64;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct PredictorConfig {
  std::vector<std::size_t> layer_sizes{32};
  std::size_t prediction_length = 3;
  std::vector<std::string> input_channels;
  std::vector<std::string> predicted_channels;
  TrainingConfig training;
  /// Covers the union of input and predicted channels once trained.
  Normalization normalization;

  std::size_t output_size() const { return prediction_length * predicted_channels.size(); }
  void validate() const;
};

struct LstmLayer {
  Eigen::MatrixXd w_in;   // 4H x I, gate blocks ordered input, forget, cell, output
  Eigen::MatrixXd w_rec;  // 4H x H
  Eigen::VectorXd bias;   // 4H

  std::size_t hidden() const { return static_cast<std::size_t>(w_rec.cols()); }
};

/// Stacked LSTM with an affine read-out of l*d predictions per step.
struct LstmNetwork {
  std::vector<LstmLayer> layers;
  Eigen::MatrixXd w_out;  // O x H_last
  Eigen::VectorXd b_out;  // O

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1.
  static LstmNetwork initialize(std::size_t input_size, const std::vector<std::size_t>& layer_sizes,
                                std::size_t output_size, Rng& rng);
  static LstmNetwork zeros(std::size_t input_size, const std::vector<std::size_t>& layer_sizes,
                           std::size_t output_size);

  std::size_t input_size() const;
  std::size_t output_size() const { return static_cast<std::size_t>(w_out.rows()); }
  std::size_t parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;
  /// Throws InvalidArgument if shapes are inconsistent.
  void validate() const;
};

/// Fixed-length training window over a batch of sequences. Step t holds
/// inputs (I x B), targets (O x B) and target weights (O x B, 0 = absent).
struct SequenceBatch {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> targets;
  std::vector<Eigen::MatrixXd> weights;
};

/// Weighted mean squared prediction error over the batch, starting from a
/// zero state; gradients by backpropagation through time when `grad` is set.
double sequence_loss(const LstmNetwork& net, const SequenceBatch& batch, LstmNetwork* grad);

/// Normalized inputs (n x I) of a series.
Eigen::MatrixXd normalized_inputs(const PredictorConfig& config, const TimeSeries& series);
/// Normalized predicted channels (n x d) of a series.
Eigen::MatrixXd normalized_targets(const PredictorConfig& config, const TimeSeries& series);

/// Row t holds the normalized predictions of steps t+1..t+l, channel-major
/// (column c*l + i-1 predicts channel c at t+i).
Eigen::MatrixXd predict(const LstmNetwork& net, const PredictorConfig& config,
                        const TimeSeries& series);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  LstmNetwork network;
  PredictorConfig config;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Adam with global-norm clipping over shuffled fixed-length chunks;
/// keeps the weights with the lowest validation loss. Normalization is fitted
/// on `train` when the config carries none. Throws TrainingDiverged.
TrainResult train(const std::vector<TimeSeries>& train, const std::vector<TimeSeries>& validation,
                  const PredictorConfig& config);

/// Mean squared multi-step error over whole series (state carried through).
double evaluation_loss(const LstmNetwork& net, const PredictorConfig& config,
                       const std::vector<TimeSeries>& series);

}  // namespace odeaug
