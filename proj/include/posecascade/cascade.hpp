#pragma once

// Holistic stage-1 regression and the refinement cascade.
//
// Stage 1 regresses the whole normalized pose from the crop of the initial
// box b0. Every later stage s looks at a square crop of side sigma * diam
// centered on each joint's previous estimate and regresses that joint's
// displacement in the crop's normalized frame:
//
//   y_i^s = denormalize(psi_i(crop(x; b); theta_s); b),
//   b     = (y_i^{s-1}, sigma * diam(y^{s-1}), sigma * diam(y^{s-1})).
//
// Refinement stages are trained on simulated previous-stage estimates: the
// ground-truth joint displaced by delta ~ N(mean_i, var_i), the per-joint
// statistics of the previous stage's errors on the training set.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "posecascade/data.hpp"
#include "posecascade/geometry.hpp"
#include "posecascade/image.hpp"
#include "posecascade/nn.hpp"
#include "posecascade/training.hpp"

namespace posecascade {

struct DisplacementEntry {
  // False when the joint was never labeled; sampling is disabled.
  bool present = false;
  Point mean;
  // Per-axis unbiased sample variance (0 with fewer than two samples).
  Point variance;
  std::size_t count = 0;

  friend bool operator==(const DisplacementEntry&,
                         const DisplacementEntry&) = default;
};

struct DisplacementStats {
  std::vector<DisplacementEntry> joints;
  friend bool operator==(const DisplacementStats&,
                         const DisplacementStats&) = default;
};

// Fits one entry per joint from observed (prediction - truth) vectors.
DisplacementStats fit_displacement_stats(
    const std::vector<std::vector<Point>>& displacements_per_joint);

// Draws delta from the axis-aligned Gaussian of `joint`. Throws
// InvalidState if the joint has no statistics.
Point sample_displacement(const DisplacementStats& stats, std::size_t joint,
                          std::mt19937_64& rng);

struct StageConfig {
  double sigma = 1.0;
  // Simulated predictions per (example, joint) for refinement stages.
  int crops_per_joint = 40;
  // Stage-1 crops per (example, flip); the first is the untranslated b0.
  int stage1_translations = 4;
  // Stage-1 translations are uniform in +-jitter * box size per axis.
  double stage1_jitter = 0.05;
  bool flips = true;
  // Empty selects nn::desk_architecture.
  std::vector<nn::LayerSpec> network;
  nn::TrainConfig train;

  void validate() const;
};

struct CascadeModel {
  Shape input_shape = nn::kDeskInputShape;
  double sigma = 1.0;
  PoseTree tree;
  std::vector<nn::Network> stages;
  // stats[s] generated the training set of stage s; stats[0] is empty.
  std::vector<DisplacementStats> stats;

  std::size_t stage_count() const { return stages.size(); }
  // Throws ValidationError if shapes, k or the stats layout disagree.
  void validate() const;
};

// Crop of `box` resampled to the network input size, pixel values shifted by
// -0.5. Converts colour images when the network expects one channel.
Tensor crop_input(const Image& image, const BoundingBox& box,
                      const Shape& input_shape);

// Normalized stage-1 set: every usable example, optionally mirrored, with
// stage1_translations crops each. Examples with no labeled joint are skipped.
// `data` must outlive the sample source.
class Stage1Samples : public nn::SampleSource {
 public:
  Stage1Samples(const std::vector<LoadedExample>& data, const PoseTree& tree,
                const StageConfig& config, Shape input_shape,
                std::uint64_t seed);

  std::size_t size() const override { return views_.size(); }
  nn::TrainingSample sample(std::size_t index) const override;
  std::size_t skipped() const { return skipped_; }

 private:
  struct View {
    std::size_t example;
    bool mirrored;
    Point shift;
  };
  const std::vector<LoadedExample>& data_;
  std::vector<Image> mirrored_images_;
  std::vector<PoseVector> mirrored_poses_;
  std::vector<BoundingBox> mirrored_boxes_;
  Shape input_shape_;
  std::vector<View> views_;
  std::size_t skipped_ = 0;
};

// One augmented refinement example.
struct AugmentedPair {
  Tensor input;
  // N(y_i; box) = -delta / side.
  Point target;
  BoundingBox box;
  Point delta;
};

// Crop around truth[joint] + delta with side sigma * diam(truth).
AugmentedPair make_refinement_pair(const Image& image, const PoseVector& truth,
                                   std::size_t joint, Point delta, double sigma,
                                   const PoseTree& tree,
                                   const Shape& input_shape);

AugmentedPair sample_augmented_pair(const LoadedExample& example,
                                    std::size_t joint,
                                    const DisplacementStats& stats,
                                    double sigma, const PoseTree& tree,
                                    const Shape& input_shape,
                                    std::mt19937_64& rng);

// The refinement set: crops_per_joint simulated predictions for every
// labeled joint of every (optionally mirrored) example. Only the sampled
// joint's two outputs are unmasked. Examples without a positive torso
// diameter are skipped. `data` must outlive the sample source.
class RefinementSamples : public nn::SampleSource {
 public:
  RefinementSamples(const std::vector<LoadedExample>& data,
                    const PoseTree& tree, const DisplacementStats& stats,
                    const StageConfig& config, Shape input_shape,
                    std::uint64_t seed);

  std::size_t size() const override { return entries_.size(); }
  nn::TrainingSample sample(std::size_t index) const override;
  std::size_t skipped() const { return skipped_; }

 private:
  struct Entry {
    std::size_t example;
    bool mirrored;
    std::size_t joint;
    Point delta;
  };
  const std::vector<LoadedExample>& data_;
  PoseTree tree_;
  double sigma_;
  std::vector<Image> mirrored_images_;
  std::vector<PoseVector> mirrored_poses_;
  Shape input_shape_;
  std::vector<Entry> entries_;
  std::size_t skipped_ = 0;
};

// Trains theta_1. Throws InvalidState when no example is usable.
nn::Network train_stage1(const std::vector<LoadedExample>& data,
                         const PoseTree& tree, const StageConfig& config,
                         Shape input_shape,
                         const nn::ProgressSink& progress = {});

// Trains the next stage on the refinement set built from `stats` and
// appends it (with the stats) to `model`. Throws InvalidState when the
// augmented set is empty.
const nn::Network& train_refinement_stage(
    const std::vector<LoadedExample>& data, CascadeModel& model,
    const DisplacementStats& stats, const StageConfig& config,
    const nn::ProgressSink& progress = {});

// y^1 = denormalize(psi(crop(x; b0); theta_1); b0).
PoseVector predict_stage1(const CascadeModel& model, const Image& image,
                          const BoundingBox& b0);

struct CascadePrediction {
  // One pose per executed stage.
  std::vector<PoseVector> poses;
  // Set when a degenerate intermediate diameter stopped the cascade.
  bool truncated = false;
};

// Runs the first min(max_stages, S) stages.
CascadePrediction predict(const CascadeModel& model, const Image& image,
                          const BoundingBox& b0,
                          std::size_t max_stages = SIZE_MAX);

// Runs the current cascade over `data` and fits per-joint statistics of
// (prediction - truth) over labeled joints.
DisplacementStats fit_displacement_stats(const CascadeModel& model,
                                         const std::vector<LoadedExample>& data,
                                         int threads = 1);

struct CascadeConfig {
  std::size_t stages = 3;
  Shape input_shape = nn::kDeskInputShape;
  StageConfig stage1;
  StageConfig refinement;
};

// Called after each stage is appended (stage index is 0-based).
using StageCallback =
    std::function<void(const CascadeModel& model, std::size_t stage)>;
// Called per epoch with the 0-based stage index.
using StageProgress =
    std::function<void(std::size_t stage, int epoch, double loss)>;

// Stage 1, then for s = 2..S: fit statistics with the cascade so far and
// train the next refinement stage.
CascadeModel train_cascade(const std::vector<LoadedExample>& data,
                           const PoseTree& tree, const CascadeConfig& config,
                           const StageCallback& on_stage = {},
                           const StageProgress& progress = {});

// Container: magic "PCCASC01", u32 version, f64 sigma, i32 h, w, c,
// pose tree, u32 S, then per stage the displacement stats and a
// length-prefixed network file (see nn_io.hpp). Little-endian throughout.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(std::ostream& os, const CascadeModel& model);
void save_model(const std::filesystem::path& path, const CascadeModel& model);
CascadeModel load_model(std::istream& is);
CascadeModel load_model(const std::filesystem::path& path);

}  // namespace posecascade
