#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "relucode/dataset.hpp"
#include "relucode/network.hpp"
#include "relucode/random.hpp"

namespace relucode {

// ---- synthetic data ----------------------------------------------------------

enum class DatasetKind { two_moons, gaussian_blobs };

struct SyntheticSpec {
  DatasetKind kind = DatasetKind::two_moons;
  std::size_t size = 2000;
  double noise = 0.1;       // moons: jitter std; blobs: cluster std
  std::uint64_t seed = 0;
  std::size_t centers = 3;  // blobs only
};

/// Two interleaving half circles, labels 0 (upper) and 1 (lower), shuffled.
Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);
/// Isotropic Gaussian clusters around centers drawn uniformly from [-5, 5]^2.
Dataset make_gaussian_blobs(std::size_t n, std::size_t centers, double std_dev, std::uint64_t seed);
Dataset make_dataset(const SyntheticSpec& spec);
std::size_t class_count(const SyntheticSpec& spec);

// ---- model -----------------------------------------------------------------------

/// Hidden ReLU stack plus an affine head producing class scores.
struct Classifier {
  std::size_t input_dim = 0;
  std::vector<AffineLayer> hidden;
  AffineLayer head;

  ReluNetwork hidden_network() const { return ReluNetwork(input_dim, hidden); }
  Eigen::VectorXd scores(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;
  std::size_t parameter_count() const;
};

/// Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Classifier init_classifier(std::size_t input_dim, const std::vector<std::size_t>& widths,
                           std::size_t classes, Rng& rng);

enum class Loss { softmax_cross_entropy, squared_error };

struct Gradients {
  std::vector<AffineLayer> hidden;
  AffineLayer head;

  static Gradients zeros_like(const Classifier& model);
};

double sample_loss(const Classifier& model, const Eigen::VectorXd& x, int label, Loss loss);

/// Adds d(loss)/d(params) for one sample into `grad`; returns the loss.
double accumulate_gradients(const Classifier& model, const Eigen::VectorXd& x, int label,
                            Loss loss, Gradients& grad);

/// Max relative difference between backprop and central differences over a
/// seeded subsample of `sample_count` parameters (all of them if fewer).
/// Differences where both gradients are below 1e-8 in magnitude count as
/// absolute differences. Throws PreconditionError unless h > 0.
double gradient_check(const Classifier& model, const Eigen::VectorXd& x, int label, double h,
                      Loss loss = Loss::softmax_cross_entropy, std::size_t sample_count = 50,
                      std::uint64_t seed = 0);

/// Smallest |pre-activation| over the hidden layers at x.
double min_abs_preactivation(const Classifier& model, const Eigen::VectorXd& x);

std::vector<int> predict_all(const ReluNetwork& hidden, const AffineLayer& head,
                             const Dataset& data);

// ---- training --------------------------------------------------------------------

struct TrainConfig {
  std::vector<std::size_t> architecture{16, 16};
  SyntheticSpec dataset;
  double learning_rate = 0.01;
  int epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir = "checkpoints";

  /// Throws ValidationError on a broken invariant.
  void validate() const;
  static TrainConfig from_json(std::string_view text);
  std::string to_json() const;
};

struct EpochMetrics {
  int epoch;
  double loss;
  double accuracy;
};

struct TrainResult {
  std::vector<std::filesystem::path> checkpoints;
  std::vector<EpochMetrics> metrics;
  Classifier model;
};

/// Plain minibatch SGD on softmax cross-entropy. After every epoch writes
/// epoch_{k:04}.rcw (hidden layers, RCW-BIN), its head sidecar and appends
/// to metrics.csv. Single-threaded and deterministic given the config.
TrainResult train(const TrainConfig& config);

/// Sidecar holding the affine head for a checkpoint: "<checkpoint>.head".
std::filesystem::path head_path(const std::filesystem::path& checkpoint);
void save_head(const AffineLayer& head, const std::filesystem::path& path);
AffineLayer load_head(const std::filesystem::path& path);

}  // namespace relucode
