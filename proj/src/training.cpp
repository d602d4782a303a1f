#include "posecascade/training.hpp"

#include <numeric>

#include "posecascade/errors.hpp"
#include "posecascade/parallel.hpp"

namespace posecascade::nn {
namespace {

using Index = Eigen::Index;

std::vector<TrainingSample> materialize(const SampleSource& data,
                                        std::span<const std::size_t> indices,
                                        int threads) {
  std::vector<TrainingSample> batch(indices.size());
  parallel_for(indices.size(), threads,
               [&](std::size_t j) { batch[j] = data.sample(indices[j]); });
  return batch;
}

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
}

}  // namespace

Matrix stack_inputs(const std::vector<TrainingSample>& samples) {
  if (samples.empty()) return {};
  const auto rows = static_cast<Index>(samples.front().input.size());
  Matrix x(rows, static_cast<Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (static_cast<Index>(samples[j].input.size()) != rows) {
      throw ShapeError("stack_inputs: inconsistent input sizes");
    }
    x.col(static_cast<Index>(j)) =
        Eigen::Map<const Vector>(samples[j].input.values.data(), rows);
  }
  return x;
}

TrainResult train_epochs(Network& net, const SampleSource& data,
                         const TrainConfig& config,
                         const ProgressSink& progress) {
  if (data.size() == 0) throw InvalidArgument("train_epochs: empty dataset");
  if (config.batch_size <= 0) {
    throw InvalidArgument("train_epochs: batch size must be positive");
  }
  TrainResult result;
  if (config.epochs <= 0) return result;

  set_math_threads(config.threads);
  net.set_dropout_keep(config.dropout_keep);
  OptimizerState state = make_optimizer_state(net, config.learning_rate);
  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      const auto batch = materialize(
          data, std::span<const std::size_t>(order).subspan(start, count),
          config.threads);
      const Matrix inputs = stack_inputs(batch);
      BatchForward f = forward_batch(net, inputs, true, rng);
      Matrix grad(f.output.rows(), f.output.cols());
      const double scale = 1.0 / static_cast<double>(count);
      for (std::size_t j = 0; j < count; ++j) {
        const auto col = static_cast<Index>(j);
        const LossResult loss = l2_loss(
            std::span<const double>(f.output.col(col).data(),
                                    static_cast<std::size_t>(f.output.rows())),
            batch[j].target, batch[j].mask);
        epoch_loss += loss.loss;
        grad.col(col) =
            scale * Eigen::Map<const Vector>(loss.grad.data(), grad.rows());
      }
      adagrad_step(net, backward(net, f.cache, grad), state);
    }
    const double mean = epoch_loss / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    if (progress) progress(epoch, mean);
  }
  return result;
}

double mean_loss(const Network& net, const SampleSource& data, int batch_size,
                 int threads) {
  if (data.size() == 0) throw InvalidArgument("mean_loss: empty dataset");
  const auto step = static_cast<std::size_t>(std::max(batch_size, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += step) {
    const std::size_t count = std::min(step, order.size() - start);
    const auto batch = materialize(
        data, std::span<const std::size_t>(order).subspan(start, count), threads);
    const Matrix out = infer_batch(net, stack_inputs(batch));
    for (std::size_t j = 0; j < count; ++j) {
      total += l2_loss(std::span<const double>(
                           out.col(static_cast<Index>(j)).data(),
                           static_cast<std::size_t>(out.rows())),
                       batch[j].target, batch[j].mask)
                   .loss;
    }
  }
  return total / static_cast<double>(data.size());
}

}  // namespace posecascade::nn
