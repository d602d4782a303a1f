#pragma once

// Feed-forward convolutional regressor: layer vocabulary, parameters,
// batched forward/backward passes, the masked L2 loss and Adagrad.
//
// Batches are Eigen matrices with one example per column; each column holds
// a tensor in channel-major order.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "posecascade/tensor.hpp"

namespace posecascade::nn {

using Rng = std::mt19937_64;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class LayerKind { kConv, kRelu, kLrn, kMaxPool, kFullyConnected, kDropout };

const char* to_string(LayerKind kind);

// Cross-channel local response normalization:
//   b_c = a_c / (k + alpha * sum_{|c' - c| <= size/2} a_{c'}^2)^beta
// Defaults are the classic ImageNet-network constants.
struct LrnParams {
  int size = 5;
  double k = 2.0;
  double alpha = 1e-4;
  double beta = 0.75;
  friend bool operator==(const LrnParams&, const LrnParams&) = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  // Conv filter side or pooling window side.
  int filter_size = 0;
  int stride = 1;
  // Conv output channels or fully connected units.
  int outputs = 0;
  double keep_probability = 1.0;
  LrnParams lrn;

  static LayerSpec conv(int filter_size, int channels, int stride = 1);
  static LayerSpec relu();
  static LayerSpec local_response_norm(LrnParams params = {});
  // Stride 0 means non-overlapping (stride == window).
  static LayerSpec max_pool(int window, int stride = 0);
  static LayerSpec fully_connected(int units);
  static LayerSpec dropout(double keep_probability);

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kFullyConnected;
  }
  // Throws ShapeError on strides/filters < 1 or keep probability outside
  // (0, 1].
  void validate() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Output shape of `spec` applied to `in`; throws ShapeError (naming
// `layer_index`) when the layer does not fit.
Shape output_shape(const LayerSpec& spec, const Shape& in,
                   std::size_t layer_index);

// Conv weights are (out_channels x in_channels*f*f) with columns ordered
// (channel, row, col); FC weights are (units x inputs). Parameter-free
// layers hold empty matrices.
struct LayerParams {
  Matrix weights;
  Vector bias;
};

using Gradients = std::vector<LayerParams>;

class Network {
 public:
  Network() = default;
  // Throws ShapeError if the stack does not chain or its final size is not
  // output_dim. Parameters start zeroed.
  Network(Shape input_shape, std::vector<LayerSpec> layers,
          std::size_t output_dim);

  const Shape& input_shape() const { return input_shape_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  // Output shape of every layer.
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t parameter_count() const;

  const std::vector<LayerParams>& params() const { return params_; }
  // Mutable access invalidates outstanding forward caches.
  std::vector<LayerParams>& mutable_params() {
    ++generation_;
    return params_;
  }
  std::uint64_t generation() const { return generation_; }

  // Sets the keep probability of every Dropout layer.
  void set_dropout_keep(double keep_probability);

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::size_t output_dim_ = 0;
  std::vector<LayerParams> params_;
  std::uint64_t generation_ = 0;
};

// Weights ~ N(0, 1/fan_in), biases zero. Deterministic in `seed`.
Network init_network(std::vector<LayerSpec> layers, Shape input_shape,
                     std::size_t output_dim, std::uint64_t seed);

// C(5x5x8)-ReLU-P(2)-C(3x3x16)-ReLU-P(2)-F(128)-ReLU-Dropout-F(outputs).
std::vector<LayerSpec> desk_architecture(std::size_t outputs,
                                         double keep_probability = 0.6);
inline constexpr Shape kDeskInputShape{60, 60, 1};

// Per-layer state saved by forward for backward.
struct ForwardCache {
  const Network* network = nullptr;
  std::uint64_t generation = 0;
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> aux;     // dropout masks, LRN denominators
  std::vector<std::vector<Eigen::Index>> argmax;  // max-pool routing
};

struct BatchForward {
  Matrix output;
  ForwardCache cache;
};

// inputs: (input_shape.size() x batch). Dropout draws from `rng` only when
// train_mode is set; inference applies no rescaling.
BatchForward forward_batch(const Network& net, const Matrix& inputs,
                           bool train_mode, Rng& rng);

// Output of the forward pass without keeping a cache.
Matrix infer_batch(const Network& net, const Matrix& inputs);

struct Forward {
  Tensor output;
  ForwardCache cache;
};

Forward forward(const Network& net, const Tensor& x, bool train_mode,
                Rng& rng);

// Gradients of sum_j <output_grad_j, output_j> with respect to every
// parameter, summed over the batch columns. Throws ContractViolation for a
// cache produced by another network or before a parameter update.
Gradients backward(const Network& net, const ForwardCache& cache,
                   const Matrix& output_grad);
Gradients backward(const Network& net, const ForwardCache& cache,
                   const Tensor& output_grad);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// sum over labeled joints of ||target_i - pred_i||^2 with its gradient
// 2 (pred - target); unlabeled joints contribute nothing.
LossResult l2_loss(std::span<const double> pred, std::span<const double> target,
                   const std::vector<bool>& mask);

struct OptimizerState {
  std::vector<LayerParams> accumulators;
  double learning_rate = 0.0005;
  double epsilon = 1e-8;
};

OptimizerState make_optimizer_state(const Network& net, double learning_rate,
                                    double epsilon = 1e-8);

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps).
void adagrad_step(Network& net, const Gradients& grads, OptimizerState& state);

Gradients zero_gradients(const Network& net);

}  // namespace posecascade::nn
