#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace posecascade {

// Planar point. Pixel coordinates place pixel centers on integers, so a
// W-pixel row spans [-0.5, W - 0.5].
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point a, Point b) = default;
};

double distance(Point a, Point b);

// Box b = (center, width, height) used for every normalization.
struct BoundingBox {
  Point center;
  double width = 1.0;
  double height = 1.0;

  // Box covering a width x height image edge to edge.
  static BoundingBox full_image(int width, int height);

  // Throws InvalidArgument unless width, height > 0 and all fields finite.
  void validate() const;
  BoundingBox shifted(Point t) const { return {center + t, width, height}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Joint pair by index, e.g. (elbow, wrist).
struct JointPair {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const JointPair&, const JointPair&) = default;
};

// Skeleton topology shared by every pose of a dataset.
struct PoseTree {
  std::size_t k = 0;
  std::vector<JointPair> limbs;
  // Opposing shoulder/hip pairs that define the torso diameter.
  std::vector<JointPair> torso_pairs;
  // Left/right pairs exchanged by a horizontal mirror.
  std::vector<JointPair> left_right_swap;
  // Optional, either empty or k entries.
  std::vector<std::string> names;

  // Throws ValidationError on out-of-range indices, limb cycles,
  // overlapping swap pairs or duplicate names.
  void validate() const;

  friend bool operator==(const PoseTree&, const PoseTree&) = default;
};

// The k joint locations of one person plus a per-joint labeled flag.
class PoseVector {
 public:
  PoseVector() = default;
  // Throws InvalidArgument on size mismatch, k < 2 or non-finite values.
  PoseVector(std::vector<Point> joints, std::vector<bool> mask);
  explicit PoseVector(std::vector<Point> joints);

  std::size_t size() const { return joints_.size(); }
  const Point& operator[](std::size_t i) const { return joints_[i]; }
  bool present(std::size_t i) const { return mask_[i]; }
  std::size_t present_count() const;

  const std::vector<Point>& joints() const { return joints_; }
  const std::vector<bool>& mask() const { return mask_; }

  // Flat (x1, y1, x2, y2, ...) layout used as a regression target.
  std::vector<double> flatten() const;

  friend bool operator==(const PoseVector&, const PoseVector&) = default;

 private:
  std::vector<Point> joints_;
  std::vector<bool> mask_;
};

// diag(1/b_w, 1/b_h) * (p - b_c).
Point normalize_point(Point p, const BoundingBox& box);
// diag(b_w, b_h) * v + b_c.
Point denormalize_point(Point v, const BoundingBox& box);

// Elementwise over labeled joints; unlabeled joints map to (0, 0) and keep
// their mask bit.
PoseVector normalize_pose(const PoseVector& pose, const BoundingBox& box);
PoseVector denormalize_pose(const PoseVector& pose, const BoundingBox& box);

// Mean Euclidean distance over the torso pairs whose both joints are
// labeled. Throws MissingTorsoError if there is none.
double pose_diameter(const PoseVector& pose, const PoseTree& tree);

// Square box of side sigma * diam(pose) centered on joint i.
// Throws DegenerateBoxError when that side is not positive.
BoundingBox joint_box(const PoseVector& pose, std::size_t joint, double sigma,
                      const PoseTree& tree);

}  // namespace posecascade
