#include <gtest/gtest.h>

#include "taco/error.hpp"
#include "taco/raster.hpp"
#include "taco/semantic.hpp"

using namespace taco;

namespace {

Sample square_sample(int side, int y0, int x0, int size, std::uint8_t label = 1) {
  Sample s;
  s.dataset_id = "d";
  s.sample_id = "s";
  s.image = Image(side, side, 0.25f);
  s.mask = Mask(side, side);
  for (int y = y0; y < y0 + size; ++y)
    for (int x = x0; x < x0 + size; ++x) s.mask.at(y, x) = label;
  return s;
}

bool is_black(const Image& img, int y, int x) {
  return img.at(0, y, x) == 0.0f && img.at(1, y, x) == 0.0f && img.at(2, y, x) == 0.0f;
}

int colored_pixels(const Image& img) {
  int n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) n += !is_black(img, y, x);
  return n;
}

}  // namespace

TEST(Semantic, SegmentationOfEmptyMaskIsBlack) {
  Sample s = square_sample(16, 0, 0, 0);
  Rng rng(1);
  const RenderedPair p = semantic_render(s, SemanticKind::kSegmentation, rng);
  EXPECT_EQ(colored_pixels(p.output), 0);
  EXPECT_EQ(p.input, s.image);
}

TEST(Semantic, SegmentationUsesClassColors) {
  Sample s = square_sample(16, 2, 2, 4, 3);
  const Image seg = render_segmentation(s.mask);
  const Rgb& c = Palette::standard().for_class(3);
  EXPECT_EQ(seg.at(0, 3, 3), c.r);
  EXPECT_EQ(seg.at(1, 3, 3), c.g);
  EXPECT_TRUE(is_black(seg, 10, 10));
}

TEST(Semantic, BoxOfARectangleIsTheRectangle) {
  Sample s = square_sample(20, 3, 5, 7);
  Rng rng(2);
  const Image box = semantic_render(s, SemanticKind::kBoxes, rng).output;
  EXPECT_EQ(box, render_segmentation(s.mask));
}

TEST(Semantic, EdgesOfCenteredSquare) {
  Sample s = square_sample(20, 5, 5, 10);
  Rng rng(3);
  EXPECT_EQ(colored_pixels(semantic_render(s, SemanticKind::kEdges, rng).output), 36);
}

TEST(Semantic, PointsAreThreeByThree) {
  Sample s = square_sample(20, 4, 4, 5);
  Rng rng(4);
  const Image pts = semantic_render(s, SemanticKind::kPoints, rng).output;
  EXPECT_EQ(colored_pixels(pts), 9);
  EXPECT_FALSE(is_black(pts, 6, 6));
}

TEST(Semantic, InteractiveMarksOneComponent) {
  Sample s = square_sample(24, 2, 2, 5);
  for (int y = 14; y < 20; ++y)
    for (int x = 14; x < 20; ++x) s.mask.at(y, x) = 2;
  Rng rng(5);
  const RenderedPair p = semantic_render(s, SemanticKind::kInteractive, rng);
  const int painted = colored_pixels(p.output);
  EXPECT_TRUE(painted == 25 || painted == 36) << painted;
  int white = 0;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x)
      white += p.input.at(0, y, x) == 1.0f && p.input.at(1, y, x) == 1.0f && p.input.at(2, y, x) == 1.0f;
  EXPECT_GT(white, 0);
  EXPECT_LE(white, 25);
}

TEST(Semantic, EmptyMaskSkipsStructuredKinds) {
  Sample s = square_sample(16, 0, 0, 0);
  Rng rng(6);
  for (SemanticKind k : {SemanticKind::kBoxes, SemanticKind::kEdges, SemanticKind::kPoints, SemanticKind::kInteractive})
    EXPECT_THROW(semantic_render(s, k, rng), SkipInstance);
}
