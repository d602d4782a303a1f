#include <gtest/gtest.h>

#include <sstream>

#include "posecascade/data.hpp"
#include "posecascade/errors.hpp"
#include "test_util.hpp"

namespace posecascade {
namespace {

using testing::TempDir;

const char* kManifest =
    "k=3  # three joints\n"
    "limb 0 1\n"
    "limb 1 2\n"
    "torso 0 2\n"
    "swap 0 2\n"
    "name 0 left\n"
    "name 1 mid\n"
    "name 2 right\n"
    "\n"
    "a.pgm - 1 2 1 3 4 1 5 6 0\n"
    "b.pgm 5,5,10,8 0.5 1.25 1 2 2 1 3 3 1 pid=7\n";

DatasetManifest parse(const std::string& text) {
  std::istringstream is(text);
  return parse_manifest(is, "test");
}

TEST(Manifest, ParsesTreeAndRecords) {
  const DatasetManifest m = parse(kManifest);
  EXPECT_EQ(m.k(), 3u);
  EXPECT_EQ(m.tree.limbs.size(), 2u);
  EXPECT_EQ(m.tree.names[2], "right");
  ASSERT_EQ(m.examples.size(), 2u);
  EXPECT_FALSE(m.examples[0].initial_box);
  EXPECT_FALSE(m.examples[0].pose.present(2));
  EXPECT_EQ(m.examples[1].initial_box->width, 10.0);
  EXPECT_EQ(m.examples[1].pose[0], (Point{0.5, 1.25}));
  EXPECT_EQ(*m.examples[1].person_id, "7");
}

TEST(Manifest, WriteParseRoundTrip) {
  const DatasetManifest m = parse(kManifest);
  std::ostringstream os;
  write_manifest(os, m);
  const DatasetManifest back = parse(os.str());
  EXPECT_EQ(back.tree, m.tree);
  EXPECT_EQ(back.examples, m.examples);
}

TEST(Manifest, WrongJointCountNamesLineAndRecord) {
  try {
    parse("k=2\nx.pgm - 1 1 1\n");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x.pgm"), std::string::npos) << msg;
  }
}

TEST(Manifest, ParseErrorsCarryLineNumbers) {
  try {
    parse("k=2\n\nx.pgm - 1 1 1 2 oops 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("limb 0 1\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("k=2\nx.pgm 1,2,3 1 1 1 2 2 1\n"), ParseError);
  EXPECT_THROW(parse("k=2\nx.pgm - 1 1 2 2 2 1\n"), ParseError);
  EXPECT_THROW(parse("k=2\nlimb 0 2\n"), ValidationError);
  EXPECT_THROW(parse("k=3\nlimb 0 1\nlimb 1 2\nlimb 2 0\n"), ValidationError);
}

TEST(Mirror, PoseSwapsAndFlips) {
  const DatasetManifest m = parse(kManifest);
  const PoseVector& p = m.examples[0].pose;
  const PoseVector q = mirror_pose(p, 10, m.tree);
  // Joint 0 and 2 exchange, x -> 9 - x.
  EXPECT_EQ(q[0], (Point{4, 6}));
  EXPECT_FALSE(q.present(0));
  EXPECT_EQ(q[1], (Point{6, 4}));
  EXPECT_EQ(q[2], (Point{8, 2}));
  EXPECT_TRUE(q.present(2));
  EXPECT_EQ(mirror_pose(q, 10, m.tree), p);
}

TEST(Mirror, ExampleMirrorsBoxAndImage) {
  const DatasetManifest m = parse(kManifest);
  Image img(10, 8, 1);
  img.at(0, 0) = 1.0;
  const auto [ex, flipped] = mirror_example(m.examples[1], img, m.tree);
  EXPECT_EQ(ex.initial_box->center, (Point{4, 5}));
  EXPECT_EQ(flipped.at(9, 0), 1.0);
}

TEST(Pnm, EightBitRoundTrip) {
  TempDir dir;
  Image img(5, 3, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels()[i] = (i % 256) / 255.0;
  save_image(dir / "x.ppm", img);
  const Image back = load_image(dir / "x.ppm");
  ASSERT_EQ(back.channels(), 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.pixels()[i], img.pixels()[i]);
  }
}

TEST(Pnm, SixteenBitAndComments) {
  std::string bytes = "P5\n# comment\n2 1\n65535\n";
  bytes += std::string("\xff\xff\x00\x01", 4);
  std::istringstream is(bytes, std::ios::binary);
  const Image img = decode_pnm(is);
  EXPECT_EQ(img.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(img.at(1, 0), 1.0 / 65535);
}

TEST(Pnm, RejectsUnsupportedAndTruncated) {
  std::istringstream ascii("P2\n1 1\n255\n0\n");
  EXPECT_THROW(decode_pnm(ascii), FormatError);
  std::istringstream png("\x89PNG....");
  EXPECT_THROW(decode_pnm(png), FormatError);
  std::istringstream cut(std::string("P5\n4 4\n255\n\x01\x02", 14), std::ios::binary);
  EXPECT_THROW(decode_pnm(cut), FormatError);
  EXPECT_THROW(load_image("/nonexistent.pgm"), FormatError);
}

TEST(LoadExamples, ResolvesPathsAndDefaultsBox) {
  TempDir dir;
  save_image(dir / "a.pgm", Image(6, 4, 1, 0.5));
  save_image(dir / "b.pgm", Image(6, 4, 1, 0.5));
  testing::write_file(dir / "m.txt", kManifest);
  const DatasetManifest m = load_manifest(dir / "m.txt");
  const auto data = load_examples(m, 1, 2);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].initial_box, BoundingBox::full_image(6, 4));
  EXPECT_EQ(data[1].initial_box.width, 10.0);
}

TEST(LoadExamples, MissingImageIsFormatError) {
  TempDir dir;
  testing::write_file(dir / "m.txt", kManifest);
  EXPECT_THROW(load_examples(load_manifest(dir / "m.txt")), FormatError);
}

}  // namespace
}  // namespace posecascade

namespace posecascade {
namespace {

TEST(Pnm, TwoByTwoScaling) {
  std::string bytes = "P5 2 2 255\n";
  bytes += std::string("\x00\xff\x00\xff", 4);
  std::istringstream is(bytes, std::ios::binary);
  const Image img = decode_pnm(is);
  EXPECT_EQ(img.pixels(), (std::vector<double>{0, 1, 0, 1}));
}

TEST(Mirror, EdgeJointMapsToLastColumn) {
  PoseTree t;
  t.k = 2;
  t.left_right_swap = {{0, 1}};
  const PoseVector p({{0, 3}, {10, 4}}, {true, false});
  const PoseVector q = mirror_pose(p, 100, t);
  // The left joint's label lands on the reflected right position.
  EXPECT_EQ(q[1], (Point{99, 3}));
  EXPECT_TRUE(q.present(1));
  EXPECT_FALSE(q.present(0));
}

}  // namespace
}  // namespace posecascade
