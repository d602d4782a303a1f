#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "posecascade/data.hpp"
#include "posecascade/geometry.hpp"
#include "posecascade/image.hpp"

namespace posecascade {

// Joint indices of the synthetic stick figure. The figure faces the viewer,
// so its left side appears on the image's right.
enum StickJoint : std::size_t {
  kHead = 0,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kStickJointCount
};

// 9 joints; limbs head-shoulders, shoulder-elbow-wrist and shoulder-hip;
// torso pairs are the two shoulder/opposite-hip diagonals.
PoseTree stick_figure_tree();

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Lengths are fractions of the image side; angles in degrees.
struct SynthConfig {
  int image_size = 120;
  std::size_t count = 500;
  std::uint64_t seed = 1;

  Range scale{0.85, 1.15};
  double center_jitter = 0.06;
  Range torso_tilt{-15.0, 15.0};
  double torso_height = 0.30;
  double shoulder_width = 0.22;
  double hip_width = 0.15;
  double head_offset = 0.12;
  double head_radius = 0.045;
  Range upper_arm{0.15, 0.19};
  Range forearm{0.13, 0.17};
  // Upper arm angle from hanging straight down, positive away from the body.
  Range shoulder_angle{-20.0, 170.0};
  // Forearm bend relative to the upper arm.
  Range elbow_angle{-135.0, 135.0};
  Range thickness{2.0, 3.5};
  Range ink{0.05, 0.3};
  double background = 0.8;
  double noise = 0.05;
  // Joints are kept at least this many pixels inside the image.
  double margin = 2.0;

  // Throws InvalidArgument on empty ranges, count 0 or a tiny image.
  void validate() const;
};

struct SynthExample {
  Image image;
  PoseVector pose;
};

// Example `index` of the dataset defined by `config`; pure function of both.
SynthExample synth_example(const SynthConfig& config, std::size_t index);

// Renders the figure for `joints` using the style and noise streams of
// example `index`; synth_example(config, i).image equals
// render_figure(config, i, synth_example(config, i).pose) bitwise.
// Output values are multiples of 1/255 so 8-bit storage is lossless.
Image render_figure(const SynthConfig& config, std::size_t index,
                    const PoseVector& joints);

// Writes images/NNNNN.pgm and manifest.txt under out_dir and returns the
// manifest (base_dir = out_dir).
DatasetManifest synth_generate(const SynthConfig& config,
                               const std::filesystem::path& out_dir,
                               int threads = 1);

}  // namespace posecascade
