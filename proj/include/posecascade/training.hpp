#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "posecascade/nn.hpp"
#include "posecascade/tensor.hpp"

namespace posecascade::nn {

// One regression example: input tensor, 2k target and k labeled flags.
struct TrainingSample {
  Tensor input;
  std::vector<double> target;
  std::vector<bool> mask;
};

// Indexable training set. sample(i) must be deterministic and safe to call
// concurrently, which lets large augmented sets materialize lazily.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainingSample sample(std::size_t index) const = 0;
};

class InMemorySamples : public SampleSource {
 public:
  InMemorySamples() = default;
  explicit InMemorySamples(std::vector<TrainingSample> samples)
      : samples_(std::move(samples)) {}

  void push_back(TrainingSample s) { samples_.push_back(std::move(s)); }
  std::size_t size() const override { return samples_.size(); }
  TrainingSample sample(std::size_t index) const override {
    return samples_.at(index);
  }

 private:
  std::vector<TrainingSample> samples_;
};

struct TrainConfig {
  int batch_size = 128;
  double learning_rate = 0.0005;
  // Keep probability applied to every Dropout layer during training.
  double dropout_keep = 0.6;
  int epochs = 1;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Called after every epoch with the mean per-sample training loss.
using ProgressSink = std::function<void(int epoch, double mean_loss)>;

struct TrainResult {
  std::vector<double> epoch_losses;
};

// Shuffled mini-batch training with Adagrad; the batch gradient is the mean
// over its examples. Throws InvalidArgument on an empty source or a
// non-positive batch size. Deterministic in config.seed for any thread
// count.
TrainResult train_epochs(Network& net, const SampleSource& data,
                         const TrainConfig& config,
                         const ProgressSink& progress = {});

// Mean per-sample masked L2 loss in inference mode.
double mean_loss(const Network& net, const SampleSource& data,
                 int batch_size = 128, int threads = 1);

// Packs samples [indices] as columns of an input matrix.
Matrix stack_inputs(const std::vector<TrainingSample>& samples);

}  // namespace posecascade::nn
