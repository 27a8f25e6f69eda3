#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clipflow/matrix.hpp"

namespace clipflow {

enum class Activation { kIdentity, kRelu, kTanh };

enum class LossKind { kMse, kSoftmaxCrossEntropy };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);
LossKind loss_from_string(const std::string& name);
std::string to_string(LossKind k);

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;
};

// Fully connected feedforward network. Parameters live in one flat buffer;
// each layer's block is [weights row-major (out x in) | bias], blocks in
// layer order, so per-layer gradient views are contiguous subranges of the
// flat gradient.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<LayerShape> layers);

  // Hidden layers use `hidden_activation`; the output layer is linear.
  static Network mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Activation hidden_activation);

  // i.i.d. Gaussian weights with stddev 1/sqrt(fan_in), zero biases.
  void init_gaussian(std::uint64_t seed);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t param_count() const { return params_.size(); }
  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }

  const std::vector<LayerShape>& layer_shapes() const { return layers_; }
  // Offsets of each layer's parameter block; size layer_count()+1.
  const std::vector<std::size_t>& layer_offsets() const { return offsets_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  void set_params(std::span<const double> values);

  double weight(std::size_t layer, std::size_t row, std::size_t col) const;
  double bias(std::size_t layer, std::size_t row) const;

  bool all_finite() const;

 private:
  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct Batch {
  DenseMatrix inputs;   // n x input_dim
  DenseMatrix targets;  // n x output_dim (one-hot rows for classification)

  std::size_t size() const { return inputs.rows(); }
};

// Per-sample losses and gradients for one (network, batch, loss) triple.
// Row i of `flat` is the full gradient of sample i's loss; the slice for
// layer r is [layer_offsets[r], layer_offsets[r+1]).
struct PerSampleGrads {
  DenseMatrix flat;  // n x P
  Vector losses;     // length n
  std::vector<std::size_t> layer_offsets;

  std::size_t sample_count() const { return flat.rows(); }
  std::size_t param_count() const { return flat.cols(); }
  std::size_t layer_count() const { return layer_offsets.empty() ? 0 : layer_offsets.size() - 1; }

  std::span<const double> sample(std::size_t i) const { return flat.row(i); }
  std::span<double> sample(std::size_t i) { return flat.row(i); }
  std::span<const double> layer_block(std::size_t i, std::size_t r) const;
  std::span<double> layer_block(std::size_t i, std::size_t r);

  double sample_norm(std::size_t i) const { return l2_norm(sample(i)); }
  double layer_norm(std::size_t i, std::size_t r) const { return l2_norm(layer_block(i, r)); }
};

// Logits for every sample; deterministic.
DenseMatrix forward(const Network& net, const Batch& batch);

// Row-wise softmax with log-sum-exp stabilization; rows sum to 1.
DenseMatrix softmax_probabilities(const DenseMatrix& logits);

Vector per_sample_losses(const DenseMatrix& logits, const DenseMatrix& targets, LossKind loss);

double mean_loss(const Network& net, const Batch& batch, LossKind loss);

// Exact per-sample gradients via one backward pass per sample.
PerSampleGrads per_sample_grads(const Network& net, const Batch& batch, LossKind loss);

// Mean of per-sample gradients, summed in ascending sample order; equals
// the gradient of the mean loss bit-for-bit.
Vector mean_gradient(const PerSampleGrads& grads);

// Rows are gradients of single outputs w.r.t. all parameters: row
// i*output_dim + k holds d f_k(x_i) / d w. Refuses to materialize more
// than 5e7 entries.
DenseMatrix jacobian(const Network& net, const Batch& batch);

// Vector of d loss_i / d f_i for scalar-output networks (length n).
Vector loss_gradient_wrt_predictions(const DenseMatrix& logits, const DenseMatrix& targets,
                                     LossKind loss);

}  // namespace clipflow
