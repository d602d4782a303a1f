#include <gtest/gtest.h>

#include "posecascade/errors.hpp"
#include "posecascade/synth.hpp"
#include "test_util.hpp"

namespace posecascade {
namespace {

TEST(Synth, TreeIsValid) {
  const PoseTree t = stick_figure_tree();
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.k, 9u);
  EXPECT_EQ(t.limbs.size(), 8u);
}

TEST(Synth, ExamplesAreDeterministicAndInside) {
  SynthConfig c;
  for (std::size_t i = 0; i < 40; ++i) {
    const SynthExample a = synth_example(c, i);
    const SynthExample b = synth_example(c, i);
    EXPECT_EQ(a.pose, b.pose);
    EXPECT_EQ(a.image, b.image);
    for (const Point& p : a.pose.joints()) {
      EXPECT_GE(p.x, c.margin);
      EXPECT_LE(p.x, c.image_size - 1 - c.margin);
      EXPECT_GE(p.y, c.margin);
      EXPECT_LE(p.y, c.image_size - 1 - c.margin);
    }
    EXPECT_GT(pose_diameter(a.pose, stick_figure_tree()), 0.0);
  }
}

TEST(Synth, SeedsChangeTheData) {
  SynthConfig a, b;
  b.seed = 2;
  EXPECT_NE(synth_example(a, 0).pose, synth_example(b, 0).pose);
  EXPECT_NE(synth_example(a, 0).pose, synth_example(a, 1).pose);
}

TEST(Synth, RenderMatchesExample) {
  SynthConfig c;
  const SynthExample ex = synth_example(c, 3);
  EXPECT_EQ(render_figure(c, 3, ex.pose), ex.image);
  for (double v : ex.image.pixels()) {
    EXPECT_DOUBLE_EQ(v * 255.0, std::round(v * 255.0));
  }
}

TEST(Synth, FigureInkIsDarkerThanBackground) {
  SynthConfig c;
  c.noise = 0.0;
  const SynthExample ex = synth_example(c, 0);
  const Point head = ex.pose[kHead];
  EXPECT_LT(ex.image.at(static_cast<int>(std::lround(head.x)),
                        static_cast<int>(std::lround(head.y))),
            c.background - 0.3);
}

TEST(Synth, GenerateWritesLosslessFiles) {
  testing::TempDir dir;
  SynthConfig c;
  c.count = 5;
  c.image_size = 48;
  const DatasetManifest m = synth_generate(c, dir.path(), 2);
  const DatasetManifest back = load_manifest(dir / "manifest.txt");
  EXPECT_EQ(back.tree, stick_figure_tree());
  ASSERT_EQ(back.examples.size(), 5u);
  const auto loaded = load_examples(back);
  for (std::size_t i = 0; i < 5; ++i) {
    const SynthExample ex = synth_example(c, i);
    EXPECT_EQ(back.examples[i].pose, ex.pose);
    EXPECT_EQ(loaded[i].image, ex.image);
  }
  EXPECT_EQ(m.examples, back.examples);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c;
  c.count = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.scale = {2, 1};
  EXPECT_THROW(c.validate(), InvalidArgument);
}

}  // namespace
}  // namespace posecascade
