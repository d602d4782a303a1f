#include "posecascade/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "posecascade/errors.hpp"

namespace posecascade {
namespace {

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void require_finite(Point p, const char* what) {
  if (!finite(p)) {
    throw InvalidArgument(std::string(what) + ": non-finite coordinate");
  }
}

std::string pair_str(const JointPair& p) {
  std::ostringstream os;
  os << "(" << p.first << ", " << p.second << ")";
  return os.str();
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

BoundingBox BoundingBox::full_image(int width, int height) {
  return {{(width - 1) / 2.0, (height - 1) / 2.0},
          static_cast<double>(width),
          static_cast<double>(height)};
}

void BoundingBox::validate() const {
  if (!finite(center) || !std::isfinite(width) || !std::isfinite(height)) {
    throw InvalidArgument("bounding box: non-finite field");
  }
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("bounding box: width and height must be positive");
  }
}

void PoseTree::validate() const {
  auto check_pairs = [this](const std::vector<JointPair>& pairs,
                            const char* what) {
    for (const auto& p : pairs) {
      if (p.first >= k || p.second >= k) {
        throw ValidationError(std::string(what) + " " + pair_str(p) +
                              ": joint index out of range for k=" +
                              std::to_string(k));
      }
      if (p.first == p.second) {
        throw ValidationError(std::string(what) + " " + pair_str(p) +
                              ": joint paired with itself");
      }
    }
  };
  check_pairs(limbs, "limb");
  check_pairs(torso_pairs, "torso pair");
  check_pairs(left_right_swap, "swap pair");

  // Union-find: a limb joining two already-connected joints closes a cycle.
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&parent](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (const auto& limb : limbs) {
    const auto a = find(limb.first);
    const auto b = find(limb.second);
    if (a == b) {
      throw ValidationError("limb " + pair_str(limb) + " closes a cycle");
    }
    parent[a] = b;
  }

  std::set<std::size_t> swapped;
  for (const auto& p : left_right_swap) {
    if (!swapped.insert(p.first).second || !swapped.insert(p.second).second) {
      throw ValidationError("swap pair " + pair_str(p) +
                            " overlaps another swap pair");
    }
  }

  if (!names.empty()) {
    if (names.size() != k) {
      throw ValidationError("expected " + std::to_string(k) +
                            " joint names, got " +
                            std::to_string(names.size()));
    }
    std::set<std::string> seen;
    for (const auto& name : names) {
      if (!seen.insert(name).second) {
        throw ValidationError("duplicate joint name '" + name + "'");
      }
    }
  }
}

PoseVector::PoseVector(std::vector<Point> joints, std::vector<bool> mask)
    : joints_(std::move(joints)), mask_(std::move(mask)) {
  if (joints_.size() != mask_.size()) {
    throw InvalidArgument("pose: joints and mask differ in length");
  }
  if (joints_.size() < 2) {
    throw InvalidArgument("pose: need at least 2 joints");
  }
  for (const auto& p : joints_) require_finite(p, "pose");
}

PoseVector::PoseVector(std::vector<Point> joints)
    : PoseVector(joints, std::vector<bool>(joints.size(), true)) {}

std::size_t PoseVector::present_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

std::vector<double> PoseVector::flatten() const {
  std::vector<double> out;
  out.reserve(2 * joints_.size());
  for (const auto& p : joints_) {
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

Point normalize_point(Point p, const BoundingBox& box) {
  require_finite(p, "normalize_point");
  box.validate();
  return {(p.x - box.center.x) / box.width, (p.y - box.center.y) / box.height};
}

Point denormalize_point(Point v, const BoundingBox& box) {
  require_finite(v, "denormalize_point");
  box.validate();
  return {box.width * v.x + box.center.x, box.height * v.y + box.center.y};
}

PoseVector normalize_pose(const PoseVector& pose, const BoundingBox& box) {
  std::vector<Point> out(pose.size());
  for (std::size_t i = 0; i < pose.size(); ++i) {
    if (pose.present(i)) out[i] = normalize_point(pose[i], box);
  }
  return PoseVector(std::move(out), pose.mask());
}

PoseVector denormalize_pose(const PoseVector& pose, const BoundingBox& box) {
  std::vector<Point> out(pose.size());
  for (std::size_t i = 0; i < pose.size(); ++i) {
    if (pose.present(i)) out[i] = denormalize_point(pose[i], box);
  }
  return PoseVector(std::move(out), pose.mask());
}

double pose_diameter(const PoseVector& pose, const PoseTree& tree) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pair : tree.torso_pairs) {
    if (pair.first >= pose.size() || pair.second >= pose.size()) {
      throw InvalidArgument("pose_diameter: torso pair outside pose");
    }
    if (pose.present(pair.first) && pose.present(pair.second)) {
      sum += distance(pose[pair.first], pose[pair.second]);
      ++count;
    }
  }
  if (count == 0) {
    throw MissingTorsoError("pose has no fully labeled torso pair");
  }
  return sum / static_cast<double>(count);
}

BoundingBox joint_box(const PoseVector& pose, std::size_t joint, double sigma,
                      const PoseTree& tree) {
  if (joint >= pose.size()) {
    throw InvalidArgument("joint_box: joint index out of range");
  }
  if (!pose.present(joint)) {
    throw InvalidArgument("joint_box: joint " + std::to_string(joint) +
                          " is not labeled");
  }
  const double side = sigma * pose_diameter(pose, tree);
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw DegenerateBoxError("joint_box: side sigma * diam = " +
                             std::to_string(side) + " is not positive");
  }
  return {pose[joint], side, side};
}

}  // namespace posecascade
