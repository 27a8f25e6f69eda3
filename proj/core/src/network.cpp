#include "clipflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clipflow/rng.hpp"
#include "clipflow/util.hpp"

namespace clipflow {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
  }
  return z;
}

// Derivative at z; relu takes subgradient 0 at the kink.
double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

void validate_pair(const Network& net, const Batch& batch) {
  if (net.layer_count() == 0) throw std::invalid_argument("network has no layers");
  if (batch.size() == 0) throw std::invalid_argument("batch is empty");
  if (batch.inputs.cols() != net.input_dim()) {
    throw std::invalid_argument("batch input dimension does not match network");
  }
  if (batch.targets.rows() != batch.size() || batch.targets.cols() != net.output_dim()) {
    throw std::invalid_argument("batch target shape does not match network output");
  }
  if (!batch.inputs.all_finite() || !batch.targets.all_finite()) {
    throw std::invalid_argument("batch contains non-finite entries");
  }
  if (!net.all_finite()) throw std::invalid_argument("network parameters are non-finite");
}

struct SampleTrace {
  // pre[r] holds layer r's pre-activation, post[r] its activation output.
  std::vector<Vector> pre;
  std::vector<Vector> post;
};

SampleTrace forward_sample(const Network& net, std::span<const double> input) {
  const auto& shapes = net.layer_shapes();
  const auto& offsets = net.layer_offsets();
  const auto params = net.params();
  SampleTrace trace;
  trace.pre.resize(shapes.size());
  trace.post.resize(shapes.size());
  Vector current(input.begin(), input.end());
  for (std::size_t r = 0; r < shapes.size(); ++r) {
    const auto& shape = shapes[r];
    const double* weights = params.data() + offsets[r];
    const double* biases = weights + shape.out * shape.in;
    Vector z(shape.out);
    for (std::size_t o = 0; o < shape.out; ++o) {
      double acc = biases[o];
      const double* wrow = weights + o * shape.in;
      for (std::size_t j = 0; j < shape.in; ++j) acc += wrow[j] * current[j];
      z[o] = acc;
    }
    trace.pre[r] = z;
    Vector a(shape.out);
    for (std::size_t o = 0; o < shape.out; ++o) a[o] = activate(shape.activation, z[o]);
    trace.post[r] = a;
    current = trace.post[r];
  }
  return trace;
}

// Backpropagates d(loss)/d(output) through the cached trace, writing the
// flat per-parameter gradient into `out` (length param_count).
void backward_sample(const Network& net, std::span<const double> input, const SampleTrace& trace,
                     std::span<const double> output_grad, std::span<double> out) {
  const auto& shapes = net.layer_shapes();
  const auto& offsets = net.layer_offsets();
  const auto params = net.params();
  const std::size_t depth = shapes.size();

  Vector delta(output_grad.size());
  for (std::size_t o = 0; o < delta.size(); ++o) {
    delta[o] = output_grad[o] * activate_grad(shapes[depth - 1].activation, trace.pre[depth - 1][o]);
  }

  for (std::size_t ri = depth; ri-- > 0;) {
    const auto& shape = shapes[ri];
    const std::span<const double> below =
        ri == 0 ? input : std::span<const double>(trace.post[ri - 1]);
    double* grad_w = out.data() + offsets[ri];
    double* grad_b = grad_w + shape.out * shape.in;
    for (std::size_t o = 0; o < shape.out; ++o) {
      const double d = delta[o];
      double* grow = grad_w + o * shape.in;
      for (std::size_t j = 0; j < shape.in; ++j) grow[j] = d * below[j];
      grad_b[o] = d;
    }
    if (ri == 0) break;
    const double* weights = params.data() + offsets[ri];
    Vector next(shape.in, 0.0);
    for (std::size_t o = 0; o < shape.out; ++o) {
      const double d = delta[o];
      const double* wrow = weights + o * shape.in;
      for (std::size_t j = 0; j < shape.in; ++j) next[j] += wrow[j] * d;
    }
    for (std::size_t j = 0; j < shape.in; ++j) {
      next[j] *= activate_grad(shapes[ri - 1].activation, trace.pre[ri - 1][j]);
    }
    delta = std::move(next);
  }
}

Vector softmax_row(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - peak);
    denom += p[k];
  }
  for (double& v : p) v /= denom;
  return p;
}

double log_sum_exp(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double z : logits) acc += std::exp(z - peak);
  return peak + std::log(acc);
}

// d(loss_i)/d(network output), written into grad.
void output_gradient(LossKind loss, std::span<const double> output, std::span<const double> target,
                     std::span<double> grad) {
  switch (loss) {
    case LossKind::kMse:
      for (std::size_t k = 0; k < output.size(); ++k) grad[k] = 2.0 * (output[k] - target[k]);
      return;
    case LossKind::kSoftmaxCrossEntropy: {
      const Vector p = softmax_row(output);
      for (std::size_t k = 0; k < output.size(); ++k) grad[k] = p[k] - target[k];
      return;
    }
  }
}

double sample_loss(LossKind loss, std::span<const double> output, std::span<const double> target) {
  switch (loss) {
    case LossKind::kMse: {
      double acc = 0.0;
      for (std::size_t k = 0; k < output.size(); ++k) {
        const double d = output[k] - target[k];
        acc += d * d;
      }
      return acc;
    }
    case LossKind::kSoftmaxCrossEntropy: {
      double dotp = 0.0;
      for (std::size_t k = 0; k < output.size(); ++k) dotp += target[k] * output[k];
      return log_sum_exp(output) - dotp;
    }
  }
  return 0.0;
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "identity";
}

LossKind loss_from_string(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "softmax_cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  throw std::invalid_argument("unknown loss: " + name);
}

std::string to_string(LossKind k) {
  return k == LossKind::kMse ? "mse" : "softmax_cross_entropy";
}

Network::Network(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  offsets_.resize(layers_.size() + 1, 0);
  for (std::size_t r = 0; r < layers_.size(); ++r) {
    if (layers_[r].in == 0 || layers_[r].out == 0) {
      throw std::invalid_argument("layer with zero width");
    }
    if (r > 0 && layers_[r].in != layers_[r - 1].out) {
      throw std::invalid_argument("consecutive layer dimensions do not chain");
    }
    offsets_[r + 1] = offsets_[r] + layers_[r].out * layers_[r].in + layers_[r].out;
  }
  params_.assign(offsets_.back(), 0.0);
}

Network Network::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Activation hidden_activation) {
  std::vector<LayerShape> shapes;
  std::size_t in = input_dim;
  for (std::size_t width : hidden_widths) {
    shapes.push_back({in, width, hidden_activation});
    in = width;
  }
  shapes.push_back({in, output_dim, Activation::kIdentity});
  return Network(std::move(shapes));
}

void Network::init_gaussian(std::uint64_t seed) {
  const CounterRng rng(seed, StreamSalt::kWeightInit);
  for (std::size_t r = 0; r < layers_.size(); ++r) {
    const auto& shape = layers_[r];
    const double stddev = 1.0 / std::sqrt(static_cast<double>(shape.in));
    const std::size_t weight_count = shape.out * shape.in;
    for (std::size_t k = 0; k < weight_count; ++k) {
      params_[offsets_[r] + k] = stddev * rng.gaussian(offsets_[r] + k);
    }
    for (std::size_t k = 0; k < shape.out; ++k) params_[offsets_[r] + weight_count + k] = 0.0;
  }
}

void Network::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw std::invalid_argument("set_params: length mismatch");
  }
  std::copy(values.begin(), values.end(), params_.begin());
}

double Network::weight(std::size_t layer, std::size_t row, std::size_t col) const {
  const auto& shape = layers_.at(layer);
  return params_[offsets_[layer] + row * shape.in + col];
}

double Network::bias(std::size_t layer, std::size_t row) const {
  const auto& shape = layers_.at(layer);
  return params_[offsets_[layer] + shape.out * shape.in + row];
}

bool Network::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

std::span<const double> PerSampleGrads::layer_block(std::size_t i, std::size_t r) const {
  return sample(i).subspan(layer_offsets[r], layer_offsets[r + 1] - layer_offsets[r]);
}

std::span<double> PerSampleGrads::layer_block(std::size_t i, std::size_t r) {
  return sample(i).subspan(layer_offsets[r], layer_offsets[r + 1] - layer_offsets[r]);
}

DenseMatrix forward(const Network& net, const Batch& batch) {
  validate_pair(net, batch);
  const std::size_t n = batch.size();
  DenseMatrix out(n, net.output_dim());
  parallel_for(0, n, [&](std::size_t i) {
    const SampleTrace trace = forward_sample(net, batch.inputs.row(i));
    const Vector& logits = trace.post.back();
    std::copy(logits.begin(), logits.end(), out.row(i).begin());
  });
  return out;
}

DenseMatrix softmax_probabilities(const DenseMatrix& logits) {
  DenseMatrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const Vector p = softmax_row(logits.row(i));
    std::copy(p.begin(), p.end(), probs.row(i).begin());
  }
  return probs;
}

Vector per_sample_losses(const DenseMatrix& logits, const DenseMatrix& targets, LossKind loss) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw std::invalid_argument("per_sample_losses: shape mismatch");
  }
  Vector losses(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    losses[i] = sample_loss(loss, logits.row(i), targets.row(i));
  }
  return losses;
}

double mean_loss(const Network& net, const Batch& batch, LossKind loss) {
  const DenseMatrix logits = forward(net, batch);
  const Vector losses = per_sample_losses(logits, batch.targets, loss);
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

PerSampleGrads per_sample_grads(const Network& net, const Batch& batch, LossKind loss) {
  validate_pair(net, batch);
  const std::size_t n = batch.size();
  PerSampleGrads grads;
  grads.flat = DenseMatrix(n, net.param_count());
  grads.losses.resize(n);
  grads.layer_offsets = net.layer_offsets();
  parallel_for(0, n, [&](std::size_t i) {
    const auto input = batch.inputs.row(i);
    const SampleTrace trace = forward_sample(net, input);
    const Vector& output = trace.post.back();
    grads.losses[i] = sample_loss(loss, output, batch.targets.row(i));
    Vector out_grad(output.size());
    output_gradient(loss, output, batch.targets.row(i), out_grad);
    backward_sample(net, input, trace, out_grad, grads.sample(i));
  });
  return grads;
}

Vector mean_gradient(const PerSampleGrads& grads) {
  const std::size_t n = grads.sample_count();
  Vector mean(grads.param_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = grads.sample(i);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : mean) v *= inv;
  return mean;
}

DenseMatrix jacobian(const Network& net, const Batch& batch) {
  validate_pair(net, batch);
  const std::size_t n = batch.size();
  const std::size_t m = net.output_dim();
  const std::size_t p = net.param_count();
  if (n * m * p > 50'000'000ULL) {
    throw std::invalid_argument("jacobian: memory cap of 5e7 entries exceeded");
  }
  DenseMatrix jac(n * m, p);
  parallel_for(0, n, [&](std::size_t i) {
    const auto input = batch.inputs.row(i);
    const SampleTrace trace = forward_sample(net, input);
    Vector seed(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      seed[k] = 1.0;
      backward_sample(net, input, trace, seed, jac.row(i * m + k));
      seed[k] = 0.0;
    }
  });
  return jac;
}

Vector loss_gradient_wrt_predictions(const DenseMatrix& logits, const DenseMatrix& targets,
                                     LossKind loss) {
  if (logits.cols() != 1) {
    throw std::invalid_argument("loss_gradient_wrt_predictions: scalar-output networks only");
  }
  if (loss != LossKind::kMse) {
    throw std::invalid_argument("loss_gradient_wrt_predictions: defined for mse");
  }
  Vector g(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) g[i] = 2.0 * (logits(i, 0) - targets(i, 0));
  return g;
}

}  // namespace clipflow
