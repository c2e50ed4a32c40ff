#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "taco/error.hpp"
#include "taco/raster.hpp"
#include "taco/semantic.hpp"

using namespace taco;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (float& v : img.data()) v = static_cast<float>(uniform01(rng));
  return img;
}

// Smooth content, so interpolation error is meaningful.
Image smooth_image(int side) {
  Image img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double u = static_cast<double>(x) / side, v = static_cast<double>(y) / side;
      img.set_rgb(y, x, static_cast<float>(0.5 + 0.4 * std::sin(3 * u + 1)), static_cast<float>(0.3 + 0.5 * v * v),
                  static_cast<float>(0.5 + 0.3 * std::cos(2 * u * v)));
    }
  return img;
}

std::size_t differing_pixels(const Image& a, const Image& b) {
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < 3; ++c)
        if (a.at(c, y, x) != b.at(c, y, x)) {
          ++n;
          break;
        }
  return n;
}

Image segmentation_image(int side) {
  Mask m(side, side);
  for (int y = side / 4; y < side / 2; ++y)
    for (int x = side / 4; x < 3 * side / 4; ++x) m.at(y, x) = 1;
  for (int y = side / 2; y < side; ++y)
    for (int x = 0; x < side / 3; ++x) m.at(y, x) = 2;
  return render_segmentation(m);
}

}  // namespace

TEST(Geometric, RotateZeroIsIdentity) {
  const Image img = random_image(9, 9, 1);
  EXPECT_EQ(rotate(img, 0.0), img);
}

TEST(Geometric, QuarterTurnsAreExact) {
  const Image img = random_image(12, 12, 2);
  Image r = img;
  for (int i = 0; i < 4; ++i) r = rotate(r, 90.0);
  EXPECT_EQ(r, img);
  EXPECT_EQ(rotate(rotate(img, 90.0), 90.0), rotate(img, 180.0));
  EXPECT_EQ(rotate(rotate(img, 180.0), 180.0), img);
  EXPECT_EQ(rotate(img, 360.0), img);
  EXPECT_EQ(rotate(img, -90.0), rotate(img, 270.0));
}

TEST(Geometric, RotateNinetyIsCounterClockwise) {
  Image img(4, 4);
  img.set_rgb(0, 3, 1, 1, 1);  // top-right corner
  const Image r = rotate(img, 90.0);
  EXPECT_EQ(r.at(0, 0, 0), 1.0f);  // moves to top-left
}

TEST(Geometric, FlipsAreInvolutions) {
  const Image img = random_image(7, 10, 3);
  EXPECT_EQ(hflip(hflip(img)), img);
  EXPECT_EQ(vflip(vflip(img)), img);
  const Image sq = random_image(8, 8, 4);
  EXPECT_EQ(hflip(vflip(sq)), rotate(sq, 180.0));
  EXPECT_EQ(hflip(img).at(1, 2, 0), img.at(1, 2, 9));
}

TEST(Geometric, Rotate45RoundTripCentralWindow) {
  const int side = 64;
  const Image img = smooth_image(side);
  const Image back = rotate(rotate(img, 45.0), -45.0);
  double err = 0;
  int n = 0;
  for (int y = side / 4; y < 3 * side / 4; ++y)
    for (int x = side / 4; x < 3 * side / 4; ++x)
      for (int c = 0; c < 3; ++c, ++n) err += std::abs(back.at(c, y, x) - img.at(c, y, x));
  EXPECT_LT(err / n, 0.02);
}

TEST(Geometric, ZoomValidatesFactor) {
  const Image img = random_image(8, 8, 5);
  EXPECT_THROW(zoom(img, 0.5), ConfigError);
  EXPECT_EQ(zoom(img, 1.0), img);
}

TEST(Photometric, BrightnessExamples) {
  const Image img = random_image(6, 6, 6);
  EXPECT_EQ(brightness(img, 1.0), img);
  const Image half = brightness(Image(5, 5, 0.8f), 0.5);
  for (float v : half.data()) EXPECT_NEAR(v, 0.4f, 1e-7);
  const Image bright = brightness(img, 3.0);
  for (float v : bright.data()) EXPECT_LE(v, 1.0f);
  EXPECT_THROW(brightness(img, 0.0), ConfigError);
  EXPECT_THROW(contrast(img, -1.0), ConfigError);
}

TEST(Photometric, InvertIsInvolution) {
  Image img(4, 4);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>(i % 5) / 4.0f;
  EXPECT_EQ(invert(invert(img)), img);
  EXPECT_FLOAT_EQ(invert(img).data()[1], 0.75f);
}

TEST(Photometric, ContrastAboutMean) {
  Image img(2, 1);
  img.set_rgb(0, 0, 0.4f, 0.4f, 0.4f);
  img.set_rgb(1, 0, 0.6f, 0.6f, 0.6f);
  const Image c = contrast(img, 1.5);
  EXPECT_NEAR(c.at(0, 0, 0), 0.35f, 1e-6);
  EXPECT_NEAR(c.at(0, 1, 0), 0.65f, 1e-6);
}

TEST(Photometric, GrayscaleAndFalseColor) {
  const Image img = random_image(5, 5, 7);
  const Image g = to_grayscale(img);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const float expect = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
      EXPECT_NEAR(g.at(0, y, x), expect, 1e-6);
      EXPECT_EQ(g.at(1, y, x), g.at(0, y, x));
      EXPECT_EQ(g.at(2, y, x), g.at(0, y, x));
    }
  const auto& lut = false_color_lut();
  std::set<std::tuple<float, float, float>> distinct;
  for (const auto& c : lut) distinct.insert({c.r, c.g, c.b});
  EXPECT_GT(distinct.size(), 200u);
  EXPECT_TRUE(all_finite_unit(false_color(img)));
}

TEST(Degrade, GaussianIsDeterministicPerSeed) {
  const Image img = random_image(8, 8, 8);
  Rng a(42), b(42);
  EXPECT_EQ(gaussian_noise(img, 0.1, a), gaussian_noise(img, 0.1, b));
  EXPECT_THROW(gaussian_noise(img, 0.0, a), ConfigError);
}

TEST(Degrade, SaltPepperFraction) {
  const Image img(128, 128, 0.5f);
  Rng rng(9);
  const Image out = salt_pepper(img, 0.1, rng);
  int extreme = 0;
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) {
      const float v = out.at(0, y, x);
      if (v == 0.0f || v == 1.0f) ++extreme;
    }
  EXPECT_NEAR(extreme / (128.0 * 128.0), 0.10, 0.02);
  EXPECT_THROW(salt_pepper(img, 0.6, rng), ConfigError);
}

TEST(Degrade, DownsampleBlockConstantFixedPoint) {
  Image img(16, 16);
  Rng rng(10);
  for (int by = 0; by < 16; by += 4)
    for (int bx = 0; bx < 16; bx += 4) {
      const auto v = static_cast<float>(uniform01(rng));
      for (int y = by; y < by + 4; ++y)
        for (int x = bx; x < bx + 4; ++x) img.set_rgb(y, x, v, v, v);
    }
  EXPECT_EQ(downsample(img, 4), img);
  EXPECT_THROW(downsample(img, 3), ConfigError);
}

TEST(Degrade, EraseAndBorder) {
  const Image img = random_image(10, 10, 11);
  const Image e = erase(img, {{2, 3, 4, 5}});
  EXPECT_EQ(e.at(1, 2, 3), 0.5f);
  EXPECT_EQ(e.at(1, 5, 7), 0.5f);
  EXPECT_EQ(e.at(1, 6, 3), img.at(1, 6, 3));
  EXPECT_THROW(erase(img, {{8, 8, 4, 4}}), ConfigError);
  const Image b = border_erase(img, 0.5);
  EXPECT_EQ(b.at(0, 0, 0), 0.5f);
  EXPECT_EQ(b.at(0, 5, 5), img.at(0, 5, 5));
  EXPECT_THROW(border_erase(img, 1.0), ConfigError);
}

TEST(Palette, DistinctWithBlackBackground) {
  const Palette& p = Palette::standard();
  EXPECT_EQ(p[0], (Rgb{0, 0, 0}));
  std::set<std::tuple<float, float, float>> colors;
  for (int i = 0; i < p.size(); ++i) {
    colors.insert({p[i].r, p[i].g, p[i].b});
    EXPECT_EQ(p.find(p[i]), i);
  }
  EXPECT_EQ(colors.size(), static_cast<std::size_t>(p.size()));
  EXPECT_EQ(p.find(Rgb{0.123f, 0.5f, 0.5f}), -1);
}

TEST(NoisySegmentation, ExactChangeCounts) {
  const Image seg = segmentation_image(100);
  const Palette& p = Palette::standard();
  Rng rng(12);
  EXPECT_EQ(noisy_segmentation(seg, 0.0, p, rng), seg);
  EXPECT_EQ(differing_pixels(noisy_segmentation(seg, 0.1, p, rng), seg), 1000u);
  EXPECT_EQ(differing_pixels(noisy_segmentation(seg, 1.0, p, rng), seg), 10000u);
  const Image noisy = noisy_segmentation(seg, 0.37, p, rng);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) EXPECT_GE(p.find({noisy.at(0, y, x), noisy.at(1, y, x), noisy.at(2, y, x)}), 0);
  EXPECT_THROW(noisy_segmentation(seg, 1.5, p, rng), ConfigError);
}

TEST(Image, ResizeSameSizeIsCopy) {
  const Image img = random_image(7, 9, 13);
  EXPECT_EQ(resize_bilinear(img, 7, 9), img);
  const Image up = resize_bilinear(Image(4, 4, 0.3f), 9, 9);
  for (float v : up.data()) EXPECT_NEAR(v, 0.3f, 1e-6);
}
