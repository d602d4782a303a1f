#include "posecascade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "posecascade/errors.hpp"
#include "posecascade/parallel.hpp"

namespace posecascade {
namespace {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, example, purpose).
Rng stream(std::uint64_t seed, std::size_t index, std::uint64_t purpose) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index * 4 + purpose)));
}

double uniform(Rng& rng, Range r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return r.lo + (r.hi - r.lo) * u;
}

double gaussian(Rng& rng) {
  // Box-Muller keeps the stream layout independent of the standard library.
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Point rotate(Point d, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  return {d.x * std::cos(a) - d.y * std::sin(a), d.x * std::sin(a) + d.y * std::cos(a)};
}

std::vector<Point> sample_joints(const SynthConfig& c, Rng& rng) {
  const double size = c.image_size;
  const double s = uniform(rng, c.scale) * size;
  const Point center{(size - 1) / 2 + uniform(rng, {-c.center_jitter, c.center_jitter}) * size,
                     (size - 1) / 2 + uniform(rng, {-c.center_jitter, c.center_jitter}) * size};
  const double tilt = uniform(rng, c.torso_tilt) * std::numbers::pi / 180.0;
  // Image y grows downwards; `up` points to the head, `side` to the
  // figure's left (image right).
  const Point up{std::sin(tilt), -std::cos(tilt)};
  const Point side{std::cos(tilt), std::sin(tilt)};

  std::vector<Point> j(kStickJointCount);
  const Point neck = center + (c.torso_height * s / 2) * up;
  const Point pelvis = center - (c.torso_height * s / 2) * up;
  j[kHead] = neck + (c.head_offset * s) * up;
  j[kLeftShoulder] = neck + (c.shoulder_width * s / 2) * side;
  j[kRightShoulder] = neck - (c.shoulder_width * s / 2) * side;
  j[kLeftHip] = pelvis + (c.hip_width * s / 2) * side;
  j[kRightHip] = pelvis - (c.hip_width * s / 2) * side;

  auto arm = [&](std::size_t shoulder, std::size_t elbow, std::size_t wrist,
                 double outward) {
    const Point down = -1.0 * up;
    const double a = uniform(rng, c.shoulder_angle) * outward;
    // Rotating `down` towards `side` is a rotation by -a in image axes when
    // side is +x; the sign flips for the right arm via `outward`.
    const Point upper = rotate(down, -a);
    const double bend = uniform(rng, c.elbow_angle);
    const Point lower = rotate(upper, bend);
    j[elbow] = j[shoulder] + (uniform(rng, c.upper_arm) * s) * upper;
    j[wrist] = j[elbow] + (uniform(rng, c.forearm) * s) * lower;
  };
  arm(kLeftShoulder, kLeftElbow, kLeftWrist, 1.0);
  arm(kRightShoulder, kRightElbow, kRightWrist, -1.0);
  return j;
}

bool inside(const std::vector<Point>& joints, const SynthConfig& c) {
  const double hi = c.image_size - 1 - c.margin;
  return std::all_of(joints.begin(), joints.end(), [&](Point p) {
    return p.x >= c.margin && p.y >= c.margin && p.x <= hi && p.y <= hi;
  });
}

double segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

// Coverage-blended stroke; a pixel at distance d gets
// clamp(thickness / 2 + 0.5 - d, 0, 1) of the ink.
void stroke(Image& img, Point a, Point b, double thickness, double ink) {
  const double reach = thickness / 2 + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = segment_distance({double(x), double(y)}, a, b);
      const double cov = std::clamp(thickness / 2 + 0.5 - d, 0.0, 1.0);
      if (cov > 0) img.at(x, y) = img.at(x, y) * (1 - cov) + ink * cov;
    }
  }
}

void disc(Image& img, Point center, double radius, double ink) {
  const int x0 = std::max(0, static_cast<int>(std::floor(center.x - radius - 1)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(center.x + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(center.y - radius - 1)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(center.y + radius + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = distance({double(x), double(y)}, center);
      const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      if (cov > 0) img.at(x, y) = img.at(x, y) * (1 - cov) + ink * cov;
    }
  }
}

}  // namespace

PoseTree stick_figure_tree() {
  PoseTree t;
  t.k = kStickJointCount;
  t.limbs = {{kHead, kLeftShoulder},       {kHead, kRightShoulder},
             {kLeftShoulder, kLeftElbow},  {kLeftElbow, kLeftWrist},
             {kRightShoulder, kRightElbow}, {kRightElbow, kRightWrist},
             {kLeftShoulder, kLeftHip},    {kRightShoulder, kRightHip}};
  t.torso_pairs = {{kLeftShoulder, kRightHip}, {kRightShoulder, kLeftHip}};
  t.left_right_swap = {{kLeftShoulder, kRightShoulder},
                       {kLeftElbow, kRightElbow},
                       {kLeftWrist, kRightWrist},
                       {kLeftHip, kRightHip}};
  t.names = {"head",        "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
             "l_wrist",     "r_wrist",    "l_hip",      "r_hip"};
  return t;
}

void SynthConfig::validate() const {
  auto check = [](Range r, const char* what) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw InvalidArgument(std::string("synth: empty range ") + what);
    }
  };
  check(scale, "scale");
  check(torso_tilt, "torso_tilt");
  check(upper_arm, "upper_arm");
  check(forearm, "forearm");
  check(shoulder_angle, "shoulder_angle");
  check(elbow_angle, "elbow_angle");
  check(thickness, "thickness");
  check(ink, "ink");
  if (count < 1) throw InvalidArgument("synth: count must be >= 1");
  if (image_size < 16) throw InvalidArgument("synth: image size must be >= 16");
  if (scale.lo <= 0) throw InvalidArgument("synth: scale must be positive");
}

Image render_figure(const SynthConfig& c, std::size_t index,
                    const PoseVector& pose) {
  if (pose.size() != kStickJointCount) {
    throw InvalidArgument("render_figure: expected a 9-joint stick figure");
  }
  Rng style = stream(c.seed, index, 1);
  const double thickness = uniform(style, c.thickness);
  const double ink = uniform(style, c.ink);

  Image img(c.image_size, c.image_size, 1, c.background);
  Rng noise = stream(c.seed, index, 2);
  for (auto& v : img.pixels()) v += c.noise * gaussian(noise);

  const auto& j = pose.joints();
  const Point neck = 0.5 * (j[kLeftShoulder] + j[kRightShoulder]);
  const double head_r = c.head_radius * distance(j[kHead], neck) / c.head_offset;
  stroke(img, j[kLeftShoulder], j[kRightShoulder], thickness, ink);
  stroke(img, j[kLeftHip], j[kRightHip], thickness, ink);
  stroke(img, j[kLeftShoulder], j[kLeftHip], thickness, ink);
  stroke(img, j[kRightShoulder], j[kRightHip], thickness, ink);
  stroke(img, neck, j[kHead], thickness, ink);
  disc(img, j[kHead], head_r, ink);
  stroke(img, j[kLeftShoulder], j[kLeftElbow], thickness, ink);
  stroke(img, j[kLeftElbow], j[kLeftWrist], thickness, ink);
  stroke(img, j[kRightShoulder], j[kRightElbow], thickness, ink);
  stroke(img, j[kRightElbow], j[kRightWrist], thickness, ink);

  for (auto& v : img.pixels()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return img;
}

SynthExample synth_example(const SynthConfig& c, std::size_t index) {
  c.validate();
  Rng rng = stream(c.seed, index, 0);
  std::vector<Point> joints;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    joints = sample_joints(c, rng);
    if (inside(joints, c)) break;
  }
  const double hi = c.image_size - 1 - c.margin;
  for (auto& p : joints) {
    p.x = std::clamp(p.x, c.margin, hi);
    p.y = std::clamp(p.y, c.margin, hi);
  }
  PoseVector pose(std::move(joints));
  Image image = render_figure(c, index, pose);
  return {std::move(image), std::move(pose)};
}

DatasetManifest synth_generate(const SynthConfig& config,
                               const std::filesystem::path& out_dir,
                               int threads) {
  config.validate();
  std::filesystem::create_directories(out_dir / "images");
  DatasetManifest m;
  m.tree = stick_figure_tree();
  m.base_dir = out_dir;
  m.examples.resize(config.count);
  parallel_for(config.count, threads, [&](std::size_t i) {
    SynthExample ex = synth_example(config, i);
    char name[32];
    std::snprintf(name, sizeof(name), "images/%05zu.pgm", i);
    save_image(out_dir / name, ex.image);
    m.examples[i].image_path = name;
    m.examples[i].pose = std::move(ex.pose);
  });
  save_manifest(out_dir / "manifest.txt", m);
  return m;
}

}  // namespace posecascade
