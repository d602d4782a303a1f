#include "posecascade/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "posecascade/errors.hpp"

namespace posecascade {

Tensor::Tensor(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
  if (values.size() != shape.size()) {
    throw ShapeError("tensor: " + std::to_string(values.size()) +
                     " values for shape of size " +
                     std::to_string(shape.size()));
  }
}

Tensor Tensor::flat(std::vector<double> v) {
  const auto n = static_cast<int>(v.size());
  return Tensor(Shape::flat(n), std::move(v));
}

namespace nn {

using Index = Eigen::Index;

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "Conv";
    case LayerKind::kRelu: return "ReLU";
    case LayerKind::kLrn: return "LRN";
    case LayerKind::kMaxPool: return "MaxPool";
    case LayerKind::kFullyConnected: return "FullyConnected";
    case LayerKind::kDropout: return "Dropout";
  }
  return "?";
}

LayerSpec LayerSpec::conv(int filter_size, int channels, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.filter_size = filter_size;
  s.outputs = channels;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::local_response_norm(LrnParams params) {
  LayerSpec s;
  s.kind = LayerKind::kLrn;
  s.lrn = params;
  return s;
}

LayerSpec LayerSpec::max_pool(int window, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.filter_size = window;
  s.stride = stride == 0 ? window : stride;
  return s;
}

LayerSpec LayerSpec::fully_connected(int units) {
  LayerSpec s;
  s.kind = LayerKind::kFullyConnected;
  s.outputs = units;
  return s;
}

LayerSpec LayerSpec::dropout(double keep_probability) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.keep_probability = keep_probability;
  return s;
}

void LayerSpec::validate() const {
  const std::string name = to_string(kind);
  switch (kind) {
    case LayerKind::kConv:
      if (outputs < 1) throw ShapeError(name + ": output channels must be >= 1");
      [[fallthrough]];
    case LayerKind::kMaxPool:
      if (filter_size < 1) throw ShapeError(name + ": filter size must be >= 1");
      if (stride < 1) throw ShapeError(name + ": stride must be >= 1");
      break;
    case LayerKind::kFullyConnected:
      if (outputs < 1) throw ShapeError(name + ": units must be >= 1");
      break;
    case LayerKind::kDropout:
      if (!(keep_probability > 0.0 && keep_probability <= 1.0)) {
        throw ShapeError(name + ": keep probability must be in (0, 1]");
      }
      break;
    case LayerKind::kLrn:
      if (lrn.size < 1 || !(lrn.k > 0.0) || lrn.alpha < 0.0 || lrn.beta < 0.0) {
        throw ShapeError(name + ": invalid constants");
      }
      break;
    case LayerKind::kRelu:
      break;
  }
}

Shape output_shape(const LayerSpec& spec, const Shape& in,
                   std::size_t layer_index) {
  auto fail = [&](const std::string& why) {
    return ShapeError("layer " + std::to_string(layer_index) + " (" +
                      to_string(spec.kind) + "): " + why);
  };
  try {
    spec.validate();
  } catch (const ShapeError& e) {
    throw fail(e.what());
  }
  switch (spec.kind) {
    case LayerKind::kConv:
    case LayerKind::kMaxPool: {
      if (spec.filter_size > in.height || spec.filter_size > in.width) {
        throw fail("window " + std::to_string(spec.filter_size) +
                   " exceeds input " + std::to_string(in.height) + "x" +
                   std::to_string(in.width));
      }
      const int h = (in.height - spec.filter_size) / spec.stride + 1;
      const int w = (in.width - spec.filter_size) / spec.stride + 1;
      return {h, w, spec.kind == LayerKind::kConv ? spec.outputs : in.channels};
    }
    case LayerKind::kFullyConnected:
      return Shape::flat(spec.outputs);
    case LayerKind::kRelu:
    case LayerKind::kLrn:
    case LayerKind::kDropout:
      return in;
  }
  throw fail("unknown layer kind");
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers,
                 std::size_t output_dim)
    : input_shape_(input_shape),
      layers_(std::move(layers)),
      output_dim_(output_dim) {
  if (input_shape_.size() == 0) throw ShapeError("network: empty input shape");
  if (layers_.empty()) throw ShapeError("network: no layers");
  Shape shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Shape in = shape;
    shape = output_shape(layers_[i], in, i);
    shapes_.push_back(shape);
    LayerParams p;
    if (layers_[i].kind == LayerKind::kConv) {
      const Index fan_in = static_cast<Index>(in.channels) *
                           layers_[i].filter_size * layers_[i].filter_size;
      p.weights = Matrix::Zero(layers_[i].outputs, fan_in);
      p.bias = Vector::Zero(layers_[i].outputs);
    } else if (layers_[i].kind == LayerKind::kFullyConnected) {
      p.weights = Matrix::Zero(layers_[i].outputs, static_cast<Index>(in.size()));
      p.bias = Vector::Zero(layers_[i].outputs);
    }
    params_.push_back(std::move(p));
  }
  if (shape.size() != output_dim_) {
    throw ShapeError("layer " + std::to_string(layers_.size() - 1) + " (" +
                     to_string(layers_.back().kind) + "): produces " +
                     std::to_string(shape.size()) + " outputs, expected " +
                     std::to_string(output_dim_));
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    n += static_cast<std::size_t>(p.weights.size() + p.bias.size());
  }
  return n;
}

void Network::set_dropout_keep(double keep_probability) {
  for (auto& layer : layers_) {
    if (layer.kind == LayerKind::kDropout) {
      layer.keep_probability = keep_probability;
      layer.validate();
    }
  }
}

Network init_network(std::vector<LayerSpec> layers, Shape input_shape,
                     std::size_t output_dim, std::uint64_t seed) {
  Network net(input_shape, std::move(layers), output_dim);
  Rng rng(seed);
  for (auto& p : net.mutable_params()) {
    if (p.weights.size() == 0) continue;
    std::normal_distribution<double> normal(
        0.0, 1.0 / std::sqrt(static_cast<double>(p.weights.cols())));
    for (Index j = 0; j < p.weights.cols(); ++j) {
      for (Index i = 0; i < p.weights.rows(); ++i) p.weights(i, j) = normal(rng);
    }
  }
  return net;
}

std::vector<LayerSpec> desk_architecture(std::size_t outputs,
                                         double keep_probability) {
  return {LayerSpec::conv(5, 8),
          LayerSpec::relu(),
          LayerSpec::max_pool(2),
          LayerSpec::conv(3, 16),
          LayerSpec::relu(),
          LayerSpec::max_pool(2),
          LayerSpec::fully_connected(128),
          LayerSpec::relu(),
          LayerSpec::dropout(keep_probability),
          LayerSpec::fully_connected(static_cast<int>(outputs))};
}

namespace {

struct ConvGeometry {
  int in_c, in_h, in_w, f, stride, out_h, out_w;

  ConvGeometry(const Shape& in, const Shape& out, const LayerSpec& spec)
      : in_c(in.channels), in_h(in.height), in_w(in.width),
        f(spec.filter_size), stride(spec.stride),
        out_h(out.height), out_w(out.width) {}

  Index positions() const { return static_cast<Index>(out_h) * out_w; }
  Index patch() const { return static_cast<Index>(in_c) * f * f; }
};

// Patch matrix (patch x positions*batch); column b*P + p is the receptive
// field of output position p of example b.
Matrix im2col(const Matrix& x, const ConvGeometry& g) {
  const Index batch = x.cols();
  const Index P = g.positions();
  Matrix col(g.patch(), P * batch);
  for (Index b = 0; b < batch; ++b) {
    const double* in = x.col(b).data();
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        double* dst = col.col(b * P + oy * g.out_w + ox).data();
        for (int c = 0; c < g.in_c; ++c) {
          for (int ky = 0; ky < g.f; ++ky) {
            const double* row =
                in + (static_cast<Index>(c) * g.in_h + oy * g.stride + ky) * g.in_w +
                ox * g.stride;
            for (int kx = 0; kx < g.f; ++kx) *dst++ = row[kx];
          }
        }
      }
    }
  }
  return col;
}

Matrix col2im(const Matrix& col, const ConvGeometry& g, Index batch) {
  const Index P = g.positions();
  Matrix dx = Matrix::Zero(static_cast<Index>(g.in_c) * g.in_h * g.in_w, batch);
  for (Index b = 0; b < batch; ++b) {
    double* out = dx.col(b).data();
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        const double* src = col.col(b * P + oy * g.out_w + ox).data();
        for (int c = 0; c < g.in_c; ++c) {
          for (int ky = 0; ky < g.f; ++ky) {
            double* row =
                out + (static_cast<Index>(c) * g.in_h + oy * g.stride + ky) * g.in_w +
                ox * g.stride;
            for (int kx = 0; kx < g.f; ++kx) row[kx] += *src++;
          }
        }
      }
    }
  }
  return dx;
}

Matrix conv_forward(const Matrix& x, const LayerParams& p,
                    const ConvGeometry& g) {
  const Index batch = x.cols();
  const Index P = g.positions();
  const Matrix col = im2col(x, g);
  // (positions*batch x out_channels): column o holds every map of channel o.
  Matrix yt = col.transpose() * p.weights.transpose();
  yt.rowwise() += p.bias.transpose();
  const Index out_c = p.weights.rows();
  Matrix y(out_c * P, batch);
  for (Index b = 0; b < batch; ++b) {
    for (Index o = 0; o < out_c; ++o) {
      y.col(b).segment(o * P, P) = yt.col(o).segment(b * P, P);
    }
  }
  return y;
}

// Returns the input gradient when need_input_grad is set.
Matrix conv_backward(const Matrix& x, const Matrix& grad, const LayerParams& p,
                     const ConvGeometry& g, LayerParams& out,
                     bool need_input_grad) {
  const Index batch = x.cols();
  const Index P = g.positions();
  const Index out_c = p.weights.rows();
  Matrix gt(P * batch, out_c);
  for (Index b = 0; b < batch; ++b) {
    for (Index o = 0; o < out_c; ++o) {
      gt.col(o).segment(b * P, P) = grad.col(b).segment(o * P, P);
    }
  }
  const Matrix col = im2col(x, g);
  out.weights = gt.transpose() * col.transpose();
  out.bias = gt.colwise().sum().transpose();
  if (!need_input_grad) return {};
  const Matrix dcol = p.weights.transpose() * gt.transpose();
  return col2im(dcol, g, batch);
}

Matrix pool_forward(const Matrix& x, const Shape& in, const Shape& out,
                    const LayerSpec& spec, std::vector<Index>* argmax) {
  const Index batch = x.cols();
  const Index out_size = static_cast<Index>(out.size());
  Matrix y(out_size, batch);
  if (argmax) argmax->resize(static_cast<std::size_t>(out_size * batch));
  for (Index b = 0; b < batch; ++b) {
    const double* src = x.col(b).data();
    for (int c = 0; c < out.channels; ++c) {
      for (int oy = 0; oy < out.height; ++oy) {
        for (int ox = 0; ox < out.width; ++ox) {
          // Scan order is row-major, and only a strictly larger value
          // replaces the running max, so ties go to the first index.
          Index best = -1;
          double best_value = 0.0;
          for (int ky = 0; ky < spec.filter_size; ++ky) {
            for (int kx = 0; kx < spec.filter_size; ++kx) {
              const Index idx =
                  (static_cast<Index>(c) * in.height + oy * spec.stride + ky) *
                      in.width +
                  ox * spec.stride + kx;
              if (best < 0 || src[idx] > best_value) {
                best = idx;
                best_value = src[idx];
              }
            }
          }
          const Index o =
              (static_cast<Index>(c) * out.height + oy) * out.width + ox;
          y(o, b) = best_value;
          if (argmax) (*argmax)[static_cast<std::size_t>(b * out_size + o)] = best;
        }
      }
    }
  }
  return y;
}

// Writes the normalized output and returns the denominators
// d = k + alpha * sum(a^2) over the channel window.
Matrix lrn_denominators(const Matrix& x, const Shape& shape,
                        const LrnParams& lrn) {
  const Index plane = static_cast<Index>(shape.height) * shape.width;
  const int half = lrn.size / 2;
  Matrix d(x.rows(), x.cols());
  for (Index b = 0; b < x.cols(); ++b) {
    for (int c = 0; c < shape.channels; ++c) {
      const int lo = std::max(0, c - half);
      const int hi = std::min(shape.channels - 1, c + half);
      for (Index p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
          const double a = x(j * plane + p, b);
          sum += a * a;
        }
        d(c * plane + p, b) = lrn.k + lrn.alpha * sum;
      }
    }
  }
  return d;
}

Matrix lrn_backward(const Matrix& x, const Matrix& d, const Matrix& grad,
                    const Shape& shape, const LrnParams& lrn) {
  const Index plane = static_cast<Index>(shape.height) * shape.width;
  const int half = lrn.size / 2;
  // t_i = g_i a_i d_i^(-beta-1)
  const Matrix t = (grad.array() * x.array() * d.array().pow(-lrn.beta - 1.0)).matrix();
  Matrix dx = (grad.array() * d.array().pow(-lrn.beta)).matrix();
  for (Index b = 0; b < x.cols(); ++b) {
    for (int c = 0; c < shape.channels; ++c) {
      const int lo = std::max(0, c - half);
      const int hi = std::min(shape.channels - 1, c + half);
      for (Index p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += t(j * plane + p, b);
        dx(c * plane + p, b) -= 2.0 * lrn.alpha * lrn.beta * x(c * plane + p, b) * sum;
      }
    }
  }
  return dx;
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix run_forward(const Network& net, const Matrix& inputs, bool train_mode,
                   Rng* rng, ForwardCache* cache) {
  if (inputs.rows() != static_cast<Index>(net.input_shape().size())) {
    throw ShapeError("forward: input has " + std::to_string(inputs.rows()) +
                     " values, network expects " +
                     std::to_string(net.input_shape().size()));
  }
  const auto& layers = net.layers();
  if (cache) {
    cache->network = &net;
    cache->generation = net.generation();
    cache->inputs.assign(layers.size(), Matrix());
    cache->aux.assign(layers.size(), Matrix());
    cache->argmax.assign(layers.size(), {});
  }
  Matrix x = inputs;
  Shape in = net.input_shape();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    const Shape& out = net.shapes()[i];
    const LayerParams& p = net.params()[i];
    Matrix y;
    switch (spec.kind) {
      case LayerKind::kConv:
        y = conv_forward(x, p, ConvGeometry(in, out, spec));
        break;
      case LayerKind::kFullyConnected:
        y = p.weights * x;
        y.colwise() += p.bias;
        break;
      case LayerKind::kRelu:
        y = x.cwiseMax(0.0);
        break;
      case LayerKind::kMaxPool:
        y = pool_forward(x, in, out, spec, cache ? &cache->argmax[i] : nullptr);
        break;
      case LayerKind::kLrn: {
        Matrix d = lrn_denominators(x, in, spec.lrn);
        y = (x.array() * d.array().pow(-spec.lrn.beta)).matrix();
        if (cache) cache->aux[i] = std::move(d);
        break;
      }
      case LayerKind::kDropout:
        if (train_mode && spec.keep_probability < 1.0) {
          Matrix mask(x.rows(), x.cols());
          const double scale = 1.0 / spec.keep_probability;
          for (Index j = 0; j < mask.size(); ++j) {
            mask.data()[j] = uniform01(*rng) < spec.keep_probability ? scale : 0.0;
          }
          y = x.cwiseProduct(mask);
          if (cache) cache->aux[i] = std::move(mask);
        } else {
          y = x;
        }
        break;
    }
    if (cache) cache->inputs[i] = std::move(x);
    x = std::move(y);
    in = out;
  }
  return x;
}

}  // namespace

BatchForward forward_batch(const Network& net, const Matrix& inputs,
                           bool train_mode, Rng& rng) {
  BatchForward result;
  result.output = run_forward(net, inputs, train_mode, &rng, &result.cache);
  return result;
}

Matrix infer_batch(const Network& net, const Matrix& inputs) {
  return run_forward(net, inputs, false, nullptr, nullptr);
}

Forward forward(const Network& net, const Tensor& x, bool train_mode,
                Rng& rng) {
  if (!(x.shape == net.input_shape())) {
    throw ShapeError("forward: input shape does not match network");
  }
  const Matrix in = Eigen::Map<const Matrix>(x.values.data(),
                                             static_cast<Index>(x.size()), 1);
  BatchForward f = forward_batch(net, in, train_mode, rng);
  Forward result;
  result.output = Tensor::flat(std::vector<double>(
      f.output.data(), f.output.data() + f.output.size()));
  result.cache = std::move(f.cache);
  return result;
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Matrix& output_grad) {
  if (cache.network != &net || cache.generation != net.generation() ||
      cache.inputs.size() != net.layers().size()) {
    throw ContractViolation(
        "backward: cache does not belong to this network state");
  }
  const Index batch = cache.inputs.front().cols();
  if (output_grad.rows() != static_cast<Index>(net.output_dim()) ||
      output_grad.cols() != batch) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  const auto& layers = net.layers();
  Gradients grads = zero_gradients(net);
  Matrix g = output_grad;
  for (std::size_t n = layers.size(); n-- > 0;) {
    const LayerSpec& spec = layers[n];
    const Matrix& x = cache.inputs[n];
    const Shape in = n == 0 ? net.input_shape() : net.shapes()[n - 1];
    const bool need_input_grad = n > 0;
    switch (spec.kind) {
      case LayerKind::kConv:
        g = conv_backward(x, g, net.params()[n],
                          ConvGeometry(in, net.shapes()[n], spec), grads[n],
                          need_input_grad);
        break;
      case LayerKind::kFullyConnected:
        grads[n].weights = g * x.transpose();
        grads[n].bias = g.rowwise().sum();
        if (need_input_grad) g = net.params()[n].weights.transpose() * g;
        break;
      case LayerKind::kRelu:
        g = (x.array() > 0.0).select(g, 0.0);
        break;
      case LayerKind::kMaxPool: {
        const auto& routes = cache.argmax[n];
        const Index out_size = g.rows();
        Matrix dx = Matrix::Zero(x.rows(), batch);
        for (Index b = 0; b < batch; ++b) {
          for (Index o = 0; o < out_size; ++o) {
            dx(routes[static_cast<std::size_t>(b * out_size + o)], b) += g(o, b);
          }
        }
        g = std::move(dx);
        break;
      }
      case LayerKind::kLrn:
        g = lrn_backward(x, cache.aux[n], g, in, spec.lrn);
        break;
      case LayerKind::kDropout:
        if (cache.aux[n].size() != 0) g = g.cwiseProduct(cache.aux[n]);
        break;
    }
  }
  return grads;
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Tensor& output_grad) {
  const Matrix g = Eigen::Map<const Matrix>(
      output_grad.values.data(), static_cast<Index>(output_grad.size()), 1);
  return backward(net, cache, g);
}

LossResult l2_loss(std::span<const double> pred, std::span<const double> target,
                   const std::vector<bool>& mask) {
  if (pred.size() != target.size() || pred.size() != 2 * mask.size()) {
    throw ShapeError("l2_loss: prediction, target and mask sizes disagree");
  }
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double dx = pred[2 * i] - target[2 * i];
    const double dy = pred[2 * i + 1] - target[2 * i + 1];
    r.loss += dx * dx + dy * dy;
    r.grad[2 * i] = 2.0 * dx;
    r.grad[2 * i + 1] = 2.0 * dy;
  }
  return r;
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  g.reserve(net.params().size());
  for (const auto& p : net.params()) {
    g.push_back({Matrix::Zero(p.weights.rows(), p.weights.cols()),
                 Vector::Zero(p.bias.size())});
  }
  return g;
}

OptimizerState make_optimizer_state(const Network& net, double learning_rate,
                                    double epsilon) {
  return {zero_gradients(net), learning_rate, epsilon};
}

void adagrad_step(Network& net, const Gradients& grads, OptimizerState& state) {
  auto& params = net.mutable_params();
  if (grads.size() != params.size() || state.accumulators.size() != params.size()) {
    throw ShapeError("adagrad_step: gradient/state layer count mismatch");
  }
  auto update = [&](auto& theta, const auto& g, auto& acc) {
    if (g.size() != theta.size() || acc.size() != theta.size()) {
      throw ShapeError("adagrad_step: gradient/state shape mismatch");
    }
    acc.array() += g.array().square();
    theta.array() -=
        state.learning_rate * g.array() / (acc.array().sqrt() + state.epsilon);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weights, grads[i].weights, state.accumulators[i].weights);
    update(params[i].bias, grads[i].bias, state.accumulators[i].bias);
  }
}

}  // namespace nn
}  // namespace posecascade
