#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grabnel/dataset.hpp"
#include "grabnel/victim.hpp"

namespace grabnel {

enum class GCNPooling { Max, Sum };

std::string to_string(GCNPooling p);
GCNPooling parse_gcn_pooling(const std::string& text);

/// Three graph convolutions X <- relu(A_hat X Theta + b) with A_hat the
/// self-loop-normalised adjacency, per-feature pooling over nodes, and a
/// linear readout with bias. Discrete labels enter as one-hot rows; with
/// degree_features = K > 0 each node also gets a one-hot of min(degree, K-1).
struct GCNWeights {
  /// Label one-hot width (discrete) or feature dimension (continuous).
  std::size_t input_dim = 0;
  std::size_t degree_features = 0;
  GCNPooling pooling = GCNPooling::Max;
  std::size_t num_classes = 0;
  std::vector<Eigen::MatrixXd> layers;  // (input+degree) x hidden, hidden x hidden, hidden x hidden
  std::vector<Eigen::VectorXd> layer_bias;  // hidden, one per convolution
  Eigen::MatrixXd readout;              // hidden x classes
  Eigen::VectorXd bias;                 // classes

  std::size_t hidden() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().cols()); }

  static GCNWeights zeros(std::size_t input_dim, std::size_t num_classes, std::size_t hidden = 16,
                          std::size_t degree_features = 0, GCNPooling pooling = GCNPooling::Max);

  /// Throws ShapeMismatch on inconsistent shapes and DivergenceError on non-finite entries.
  void validate() const;

  bool operator==(const GCNWeights& other) const;
};

/// Class logits (before softmax). Throws ShapeMismatch if g does not fit the input layer.
Eigen::VectorXd gcn_logits(const Graph& g, const GCNWeights& w);

VictimResponse gcn_forward(const Graph& g, const GCNWeights& w);

/// Self-loop-normalised adjacency D^-1/2 (A + I) D^-1/2 using edge weights.
Eigen::MatrixXd normalised_adjacency(const Graph& g);

/// Node input matrix for the first layer.
Eigen::MatrixXd gcn_input(const Graph& g, std::size_t input_dim, std::size_t degree_features = 0);

/// Feature dimension a dataset needs: label count for discrete data, feature dim otherwise.
std::size_t infer_input_dim(const LabeledDataset& ds);

struct GCNTrainConfig {
  std::size_t hidden = 16;
  int epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// 0 infers the input dimension from the dataset.
  std::size_t input_dim = 0;
  std::size_t degree_features = 0;
  GCNPooling pooling = GCNPooling::Max;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct GCNTrainResult {
  /// Weights from the epoch with the best validation accuracy (earliest on ties);
  /// the final epoch's weights when there is no validation split.
  GCNWeights weights;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
};

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

/// Mini-batch Adam on cross-entropy over the training split.
/// Throws EmptyInput on an empty training split and DivergenceError if the loss turns non-finite.
GCNTrainResult train_gcn(const LabeledDataset& ds, const GCNTrainConfig& cfg = {},
                         const EpochCallback& on_epoch = {});

/// Cross-entropy of one graph and its gradient with respect to every weight.
double gcn_loss_and_gradient(const Graph& g, int label, const GCNWeights& w, GCNWeights& grad);

double gcn_accuracy(const LabeledDataset& ds, std::span<const std::size_t> indices, const GCNWeights& w);

std::string gcn_weights_to_json(const GCNWeights& w);
GCNWeights gcn_weights_from_json(const std::string& text);
void save_gcn_weights(const GCNWeights& w, const std::filesystem::path& path);
GCNWeights load_gcn_weights(const std::filesystem::path& path);

/// In-process victim; scores are exactly gcn_forward's.
class GCNSession : public VictimSession {
 public:
  explicit GCNSession(std::shared_ptr<const GCNWeights> weights) : weights_(std::move(weights)) {}

 protected:
  VictimResponse do_query(const Graph& g) override { return gcn_forward(g, *weights_); }

 private:
  std::shared_ptr<const GCNWeights> weights_;
};

}  // namespace grabnel
