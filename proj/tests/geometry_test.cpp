#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "posecascade/errors.hpp"
#include "posecascade/geometry.hpp"

namespace posecascade {
namespace {

PoseTree four_joint_tree() {
  PoseTree t;
  t.k = 4;
  t.limbs = {{0, 1}, {1, 2}, {2, 3}};
  t.torso_pairs = {{0, 3}, {1, 2}};
  t.left_right_swap = {{0, 1}};
  return t;
}

TEST(Normalize, MapsBoxCenterToOrigin) {
  const BoundingBox b{{110, 110}, 220, 220};
  const Point n = normalize_point({110, 110}, b);
  EXPECT_EQ(n.x, 0.0);
  EXPECT_EQ(n.y, 0.0);
}

TEST(Normalize, MapsCornerToHalf) {
  const BoundingBox b{{50, 20}, 40, 10};
  const Point n = normalize_point({70, 25}, b);
  EXPECT_DOUBLE_EQ(n.x, 0.5);
  EXPECT_DOUBLE_EQ(n.y, 0.5);
}

TEST(Normalize, RoundTripIsTight) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-500, 500), size(0.5, 400);
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox b{{pos(rng), pos(rng)}, size(rng), size(rng)};
    const Point p{pos(rng), pos(rng)};
    const Point q = denormalize_point(normalize_point(p, b), b);
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(Normalize, RejectsNonFinite) {
  const BoundingBox b{{0, 0}, 1, 1};
  EXPECT_THROW(normalize_point({NAN, 0}, b), InvalidArgument);
  EXPECT_THROW(denormalize_point({0, INFINITY}, b), InvalidArgument);
}

TEST(Normalize, RejectsDegenerateBox) {
  EXPECT_THROW(normalize_point({0, 0}, {{0, 0}, 0, 1}), InvalidArgument);
  EXPECT_THROW(normalize_point({0, 0}, {{0, 0}, 1, -2}), InvalidArgument);
}

TEST(Normalize, PoseKeepsMaskAndZeroesUnlabeled) {
  const PoseVector p({{1, 2}, {3, 4}, {5, 6}}, {true, false, true});
  const BoundingBox b{{1, 2}, 2, 2};
  const PoseVector n = normalize_pose(p, b);
  EXPECT_EQ(n.mask(), p.mask());
  EXPECT_EQ(n[1], (Point{0, 0}));
  EXPECT_EQ(n[2], (Point{2, 2}));
  EXPECT_EQ(denormalize_pose(n, b)[2], p[2]);
}

TEST(FullImageBox, CoversPixelEdges) {
  const BoundingBox b = BoundingBox::full_image(220, 100);
  EXPECT_EQ(b.center, (Point{109.5, 49.5}));
  EXPECT_EQ(b.width, 220);
  EXPECT_EQ(b.height, 100);
}

TEST(PoseVector, RejectsBadInput) {
  EXPECT_THROW(PoseVector({{0, 0}}, {true}), InvalidArgument);
  EXPECT_THROW(PoseVector({{0, 0}, {1, 1}}, {true}), InvalidArgument);
  EXPECT_THROW(PoseVector({{0, 0}, {NAN, 1}}), InvalidArgument);
}

TEST(PoseVector, FlattenIsInterleaved) {
  const PoseVector p({{1, 2}, {3, 4}});
  EXPECT_EQ(p.flatten(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(p.present_count(), 2u);
}

TEST(Diameter, MeanOfLabeledTorsoPairs) {
  const PoseTree t = four_joint_tree();
  // (0,3) has length 10, (1,2) length 4.
  const PoseVector p({{0, 0}, {0, 1}, {4, 1}, {6, 8}});
  EXPECT_DOUBLE_EQ(pose_diameter(p, t), 7.0);
  const PoseVector partial({{0, 0}, {0, 1}, {4, 1}, {6, 8}}, {true, true, true, false});
  EXPECT_DOUBLE_EQ(pose_diameter(partial, t), 4.0);
}

TEST(Diameter, ThrowsWithoutTorso) {
  const PoseTree t = four_joint_tree();
  const PoseVector p({{0, 0}, {0, 1}, {4, 1}, {6, 8}}, {true, false, true, false});
  EXPECT_THROW(pose_diameter(p, t), MissingTorsoError);
}

TEST(JointBox, SquareOfScaledDiameter) {
  const PoseTree t = four_joint_tree();
  const PoseVector p({{0, 0}, {0, 1}, {4, 1}, {6, 8}});
  const BoundingBox b = joint_box(p, 2, 0.5, t);
  EXPECT_EQ(b.center, (Point{4, 1}));
  EXPECT_DOUBLE_EQ(b.width, 3.5);
  EXPECT_DOUBLE_EQ(b.height, 3.5);
}

TEST(JointBox, DegenerateDiameterThrows) {
  const PoseTree t = four_joint_tree();
  const PoseVector p({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  EXPECT_THROW(joint_box(p, 0, 1.0, t), DegenerateBoxError);
}

TEST(PoseTree, ValidatesStructure) {
  PoseTree t = four_joint_tree();
  EXPECT_NO_THROW(t.validate());

  PoseTree out_of_range = t;
  out_of_range.limbs.push_back({0, 4});
  EXPECT_THROW(out_of_range.validate(), ValidationError);

  PoseTree cycle = t;
  cycle.limbs.push_back({3, 0});
  EXPECT_THROW(cycle.validate(), ValidationError);

  PoseTree overlap = t;
  overlap.left_right_swap.push_back({1, 2});
  EXPECT_THROW(overlap.validate(), ValidationError);

  PoseTree names = t;
  names.names = {"a", "b", "a", "d"};
  EXPECT_THROW(names.validate(), ValidationError);
}

}  // namespace
}  // namespace posecascade

namespace posecascade {
namespace {

TEST(Normalize, WorkedExamples) {
  const BoundingBox b{{110, 110}, 220, 220};
  EXPECT_EQ(normalize_point({165, 165}, b), (Point{0.25, 0.25}));
  EXPECT_EQ(normalize_point({0, 0}, b), (Point{-0.5, -0.5}));
  EXPECT_EQ(denormalize_point({0.25, 0.25}, b), (Point{165, 165}));
  EXPECT_EQ(denormalize_point({-0.5, -0.5}, b), (Point{0, 0}));
  EXPECT_EQ(denormalize_point({0, 0}, {{3.5, -2}, 7, 9}), (Point{3.5, -2}));
}

TEST(Normalize, TranslationEquivariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-300, 300), s(1, 200);
  for (int i = 0; i < 200; ++i) {
    const BoundingBox b{{u(rng), u(rng)}, s(rng), s(rng)};
    const Point p{u(rng), u(rng)}, t{u(rng), u(rng)};
    const Point a = normalize_point(p + t, b.shifted(t));
    const Point c = normalize_point(p, b);
    EXPECT_NEAR(a.x, c.x, 1e-12);
    EXPECT_NEAR(a.y, c.y, 1e-12);
  }
}

TEST(Diameter, WorkedExamples) {
  PoseTree one;
  one.k = 2;
  one.torso_pairs = {{0, 1}};
  EXPECT_EQ(pose_diameter(PoseVector({{0, 0}, {30, 40}}), one), 50.0);
  EXPECT_EQ(pose_diameter(PoseVector({{5, 5}, {5, 5}}), one), 0.0);

  PoseTree two;
  two.k = 4;
  two.torso_pairs = {{0, 1}, {2, 3}};
  EXPECT_EQ(pose_diameter(PoseVector({{0, 0}, {40, 0}, {0, 0}, {0, 60}}), two), 50.0);
}

TEST(Diameter, TranslationInvariant) {
  PoseTree t;
  t.k = 4;
  t.torso_pairs = {{0, 3}, {1, 2}};
  const PoseVector p({{0, 0}, {0, 1}, {4, 1}, {6, 8}});
  std::vector<Point> moved = p.joints();
  for (auto& q : moved) q = q + Point{17.25, -3.5};
  EXPECT_NEAR(pose_diameter(PoseVector(moved), t), pose_diameter(p, t), 1e-12);
}

TEST(JointBox, WorkedExamplesAndLinearity) {
  PoseTree t;
  t.k = 3;
  t.torso_pairs = {{1, 2}};
  const PoseVector p({{50, 60}, {0, 0}, {30, 40}});
  EXPECT_EQ(joint_box(p, 0, 1.0, t), (BoundingBox{{50, 60}, 50, 50}));
  EXPECT_EQ(joint_box(p, 0, 2.0, t), (BoundingBox{{50, 60}, 100, 100}));
  const BoundingBox a = joint_box(p, 0, 0.37, t), b = joint_box(p, 0, 0.74, t);
  EXPECT_EQ(b.width, 2 * a.width);
  EXPECT_EQ(b.height, 2 * a.height);
  EXPECT_THROW(joint_box(p, 0, 0.0, t), DegenerateBoxError);
}

}  // namespace
}  // namespace posecascade
