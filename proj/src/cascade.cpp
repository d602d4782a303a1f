#include "posecascade/cascade.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "posecascade/errors.hpp"
#include "posecascade/parallel.hpp"

namespace posecascade {
namespace {

using Rng = std::mt19937_64;

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double gaussian(Rng& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<nn::LayerSpec> network_spec(const StageConfig& c, std::size_t k) {
  return c.network.empty() ? nn::desk_architecture(2 * k, c.train.dropout_keep)
                           : c.network;
}

// Diameter, or nullopt when the pose has none (or a degenerate one).
std::optional<double> usable_diameter(const PoseVector& pose,
                                      const PoseTree& tree) {
  try {
    const double d = pose_diameter(pose, tree);
    if (d > 0.0 && std::isfinite(d)) return d;
  } catch (const MissingTorsoError&) {
  }
  return std::nullopt;
}

}  // namespace

DisplacementStats fit_displacement_stats(
    const std::vector<std::vector<Point>>& displacements_per_joint) {
  DisplacementStats stats;
  stats.joints.resize(displacements_per_joint.size());
  for (std::size_t j = 0; j < displacements_per_joint.size(); ++j) {
    const auto& d = displacements_per_joint[j];
    auto& e = stats.joints[j];
    e.count = d.size();
    if (d.empty()) continue;
    e.present = true;
    Point sum;
    for (const auto& p : d) sum = sum + p;
    const double n = static_cast<double>(d.size());
    e.mean = (1.0 / n) * sum;
    if (d.size() > 1) {
      Point sq;
      for (const auto& p : d) {
        const Point r = p - e.mean;
        sq = sq + Point{r.x * r.x, r.y * r.y};
      }
      e.variance = (1.0 / (n - 1.0)) * sq;
    }
  }
  return stats;
}

Point sample_displacement(const DisplacementStats& stats, std::size_t joint,
                          std::mt19937_64& rng) {
  if (joint >= stats.joints.size() || !stats.joints[joint].present) {
    throw InvalidState("no displacement statistics for joint " +
                       std::to_string(joint));
  }
  const auto& e = stats.joints[joint];
  const double gx = gaussian(rng);
  const double gy = gaussian(rng);
  return {e.mean.x + std::sqrt(e.variance.x) * gx,
          e.mean.y + std::sqrt(e.variance.y) * gy};
}

void StageConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("stage config: sigma must be positive");
  }
  if (crops_per_joint < 1) {
    throw InvalidArgument("stage config: crops_per_joint must be >= 1");
  }
  if (stage1_translations < 1) {
    throw InvalidArgument("stage config: stage1_translations must be >= 1");
  }
  if (stage1_jitter < 0.0) {
    throw InvalidArgument("stage config: stage1_jitter must be >= 0");
  }
}

void CascadeModel::validate() const {
  tree.validate();
  if (!(sigma > 0.0)) throw ValidationError("model: sigma must be positive");
  if (stats.size() != stages.size()) {
    throw ValidationError("model: one stats entry per stage required");
  }
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (!(stages[s].input_shape() == input_shape)) {
      throw ValidationError("model: stage " + std::to_string(s + 1) +
                            " input shape differs from the model's");
    }
    if (stages[s].output_dim() != 2 * tree.k) {
      throw ValidationError("model: stage " + std::to_string(s + 1) +
                            " does not output 2k values");
    }
    if (s > 0 && stats[s].joints.size() != tree.k) {
      throw ValidationError("model: stage " + std::to_string(s + 1) +
                            " lacks displacement statistics");
    }
  }
}

Tensor crop_input(const Image& image, const BoundingBox& box,
                      const Shape& input_shape) {
  Image converted;
  const Image* source = &image;
  if (input_shape.channels == 1 && image.channels() != 1) {
    converted = to_grayscale(image);
    source = &converted;
  } else if (input_shape.channels != image.channels()) {
    throw ShapeError("crop_input: image has " + std::to_string(image.channels()) +
                     " channels, network expects " +
                     std::to_string(input_shape.channels));
  }
  Image crop = crop_resample(*source, box, input_shape.width, input_shape.height);
  Tensor t(input_shape, std::move(crop.pixels()));
  for (auto& v : t.values) v -= 0.5;
  return t;
}

Stage1Samples::Stage1Samples(const std::vector<LoadedExample>& data,
                             const PoseTree& tree, const StageConfig& config,
                             Shape input_shape, std::uint64_t seed)
    : data_(data), input_shape_(input_shape) {
  config.validate();
  Rng rng(seed);
  if (config.flips) {
    mirrored_images_.reserve(data.size());
    for (const auto& ex : data) {
      mirrored_images_.push_back(mirror_image(ex.image));
      mirrored_poses_.push_back(mirror_pose(ex.pose, ex.image.width(), tree));
      BoundingBox b = ex.initial_box;
      b.center.x = (ex.image.width() - 1) - b.center.x;
      mirrored_boxes_.push_back(b);
    }
  }
  for (std::size_t e = 0; e < data.size(); ++e) {
    if (data[e].pose.present_count() == 0) {
      std::clog << "warning: example " << e << " has no labeled joints, skipped\n";
      ++skipped_;
      continue;
    }
    for (int m = 0; m < (config.flips ? 2 : 1); ++m) {
      const BoundingBox& b = m ? mirrored_boxes_[e] : data[e].initial_box;
      for (int t = 0; t < config.stage1_translations; ++t) {
        Point shift;
        if (t > 0) {
          shift = {(2.0 * uniform01(rng) - 1.0) * config.stage1_jitter * b.width,
                   (2.0 * uniform01(rng) - 1.0) * config.stage1_jitter * b.height};
        }
        views_.push_back({e, m == 1, shift});
      }
    }
  }
}

nn::TrainingSample Stage1Samples::sample(std::size_t index) const {
  const View& v = views_.at(index);
  const LoadedExample& ex = data_[v.example];
  const Image& image = v.mirrored ? mirrored_images_[v.example] : ex.image;
  const PoseVector& pose = v.mirrored ? mirrored_poses_[v.example] : ex.pose;
  const BoundingBox box =
      (v.mirrored ? mirrored_boxes_[v.example] : ex.initial_box).shifted(v.shift);
  return {crop_input(image, box, input_shape_),
          normalize_pose(pose, box).flatten(), pose.mask()};
}

AugmentedPair make_refinement_pair(const Image& image, const PoseVector& truth,
                                   std::size_t joint, Point delta, double sigma,
                                   const PoseTree& tree,
                                   const Shape& input_shape) {
  if (joint >= truth.size() || !truth.present(joint)) {
    throw InvalidArgument("refinement pair: joint is not labeled");
  }
  const double side = sigma * pose_diameter(truth, tree);
  if (!(side > 0.0)) {
    throw DegenerateBoxError("refinement pair: degenerate diameter");
  }
  const BoundingBox box{truth[joint] + delta, side, side};
  return {crop_input(image, box, input_shape), normalize_point(truth[joint], box),
          box, delta};
}

AugmentedPair sample_augmented_pair(const LoadedExample& example,
                                    std::size_t joint,
                                    const DisplacementStats& stats,
                                    double sigma, const PoseTree& tree,
                                    const Shape& input_shape,
                                    std::mt19937_64& rng) {
  const Point delta = sample_displacement(stats, joint, rng);
  return make_refinement_pair(example.image, example.pose, joint, delta, sigma,
                              tree, input_shape);
}

RefinementSamples::RefinementSamples(const std::vector<LoadedExample>& data,
                                     const PoseTree& tree,
                                     const DisplacementStats& stats,
                                     const StageConfig& config,
                                     Shape input_shape, std::uint64_t seed)
    : data_(data), tree_(tree), sigma_(config.sigma), input_shape_(input_shape) {
  config.validate();
  if (stats.joints.size() != tree.k) {
    throw InvalidArgument("refinement samples: stats do not match k");
  }
  if (config.flips) {
    for (const auto& ex : data) {
      mirrored_images_.push_back(mirror_image(ex.image));
      mirrored_poses_.push_back(mirror_pose(ex.pose, ex.image.width(), tree));
    }
  }
  Rng rng(seed);
  for (std::size_t e = 0; e < data.size(); ++e) {
    if (!usable_diameter(data[e].pose, tree)) {
      std::clog << "warning: example " << e
                << " has no usable torso diameter, skipped\n";
      ++skipped_;
      continue;
    }
    for (int m = 0; m < (config.flips ? 2 : 1); ++m) {
      const PoseVector& pose = m ? mirrored_poses_[e] : data[e].pose;
      for (std::size_t j = 0; j < tree.k; ++j) {
        if (!pose.present(j) || !stats.joints[j].present) continue;
        for (int c = 0; c < config.crops_per_joint; ++c) {
          entries_.push_back({e, m == 1, j, sample_displacement(stats, j, rng)});
        }
      }
    }
  }
}

nn::TrainingSample RefinementSamples::sample(std::size_t index) const {
  const Entry& en = entries_.at(index);
  const LoadedExample& ex = data_[en.example];
  const Image& image = en.mirrored ? mirrored_images_[en.example] : ex.image;
  const PoseVector& pose = en.mirrored ? mirrored_poses_[en.example] : ex.pose;
  AugmentedPair pair =
      make_refinement_pair(image, pose, en.joint, en.delta, sigma_, tree_, input_shape_);
  nn::TrainingSample s;
  s.input = std::move(pair.input);
  s.target.assign(2 * tree_.k, 0.0);
  s.target[2 * en.joint] = pair.target.x;
  s.target[2 * en.joint + 1] = pair.target.y;
  s.mask.assign(tree_.k, false);
  s.mask[en.joint] = true;
  return s;
}

nn::Network train_stage1(const std::vector<LoadedExample>& data,
                         const PoseTree& tree, const StageConfig& config,
                         Shape input_shape,
                         const nn::ProgressSink& progress) {
  const Stage1Samples samples(data, tree, config, input_shape,
                              config.train.seed ^ 0x5151);
  if (samples.size() == 0) {
    throw InvalidState("train_stage1: no usable training examples");
  }
  nn::Network net = nn::init_network(network_spec(config, tree.k), input_shape,
                                     2 * tree.k, config.train.seed);
  nn::train_epochs(net, samples, config.train, progress);
  return net;
}

const nn::Network& train_refinement_stage(
    const std::vector<LoadedExample>& data, CascadeModel& model,
    const DisplacementStats& stats, const StageConfig& config,
    const nn::ProgressSink& progress) {
  if (model.stages.empty()) {
    throw InvalidState("train_refinement_stage: stage 1 is not trained");
  }
  const RefinementSamples samples(data, model.tree, stats, config,
                                  model.input_shape,
                                  config.train.seed ^ 0xa5a5);
  if (samples.size() == 0) {
    throw InvalidState("train_refinement_stage: augmented set is empty");
  }
  nn::Network net = nn::init_network(network_spec(config, model.tree.k),
                                     model.input_shape, 2 * model.tree.k,
                                     config.train.seed);
  nn::train_epochs(net, samples, config.train, progress);
  model.sigma = config.sigma;
  model.stages.push_back(std::move(net));
  model.stats.push_back(stats);
  return model.stages.back();
}

PoseVector predict_stage1(const CascadeModel& model, const Image& image,
                          const BoundingBox& b0) {
  if (model.stages.empty()) throw InvalidState("predict: model has no stages");
  const Tensor input = crop_input(image, b0, model.input_shape);
  const nn::Matrix out = nn::infer_batch(
      model.stages.front(),
      Eigen::Map<const nn::Matrix>(input.values.data(),
                                   static_cast<Eigen::Index>(input.size()), 1));
  std::vector<Point> joints(model.tree.k);
  for (std::size_t i = 0; i < model.tree.k; ++i) {
    joints[i] = denormalize_point({out(2 * i, 0), out(2 * i + 1, 0)}, b0);
  }
  return PoseVector(std::move(joints));
}

CascadePrediction predict(const CascadeModel& model, const Image& image,
                          const BoundingBox& b0, std::size_t max_stages) {
  CascadePrediction result;
  const std::size_t stages = std::min(max_stages, model.stage_count());
  if (stages == 0) return result;
  result.poses.push_back(predict_stage1(model, image, b0));
  const std::size_t k = model.tree.k;
  const auto in_size = static_cast<Eigen::Index>(model.input_shape.size());
  for (std::size_t s = 1; s < stages; ++s) {
    const PoseVector& prev = result.poses.back();
    const auto diam = usable_diameter(prev, model.tree);
    if (!diam || !(model.sigma * *diam > 0.0)) {
      result.truncated = true;
      break;
    }
    const double side = model.sigma * *diam;
    std::vector<BoundingBox> boxes(k);
    nn::Matrix inputs(in_size, static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      boxes[i] = {prev[i], side, side};
      const Tensor t = crop_input(image, boxes[i], model.input_shape);
      inputs.col(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const nn::Vector>(t.values.data(), in_size);
    }
    const nn::Matrix out = nn::infer_batch(model.stages[s], inputs);
    std::vector<Point> joints(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      joints[i] = denormalize_point({out(2 * i, col), out(2 * i + 1, col)}, boxes[i]);
    }
    result.poses.emplace_back(std::move(joints));
  }
  return result;
}

DisplacementStats fit_displacement_stats(const CascadeModel& model,
                                         const std::vector<LoadedExample>& data,
                                         int threads) {
  if (model.stages.empty()) {
    throw InvalidState("fit_displacement_stats: model has no stages");
  }
  std::vector<std::optional<PoseVector>> predictions(data.size());
  parallel_for(data.size(), threads, [&](std::size_t e) {
    CascadePrediction p = predict(model, data[e].image, data[e].initial_box);
    if (!p.truncated) predictions[e] = std::move(p.poses.back());
  });
  std::vector<std::vector<Point>> displacements(model.tree.k);
  for (std::size_t e = 0; e < data.size(); ++e) {
    if (!predictions[e]) continue;
    for (std::size_t j = 0; j < model.tree.k; ++j) {
      if (data[e].pose.present(j)) {
        displacements[j].push_back((*predictions[e])[j] - data[e].pose[j]);
      }
    }
  }
  return fit_displacement_stats(displacements);
}

CascadeModel train_cascade(const std::vector<LoadedExample>& data,
                           const PoseTree& tree, const CascadeConfig& config,
                           const StageCallback& on_stage,
                           const StageProgress& progress) {
  if (config.stages < 1) throw InvalidArgument("train_cascade: stages must be >= 1");
  config.stage1.validate();
  config.refinement.validate();
  auto sink = [&progress](std::size_t stage) -> nn::ProgressSink {
    if (!progress) return {};
    return [&progress, stage](int epoch, double loss) { progress(stage, epoch, loss); };
  };

  CascadeModel model;
  model.input_shape = config.input_shape;
  model.sigma = config.refinement.sigma;
  model.tree = tree;
  model.stages.push_back(
      train_stage1(data, tree, config.stage1, config.input_shape, sink(0)));
  model.stats.emplace_back();
  if (on_stage) on_stage(model, 0);

  for (std::size_t s = 1; s < config.stages; ++s) {
    StageConfig stage_config = config.refinement;
    stage_config.train.seed += s;
    const DisplacementStats stats =
        fit_displacement_stats(model, data, stage_config.train.threads);
    train_refinement_stage(data, model, stats, stage_config, sink(s));
    if (on_stage) on_stage(model, s);
  }
  return model;
}

}  // namespace posecascade
