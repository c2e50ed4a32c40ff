#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "taco/image.hpp"
#include "taco/rng.hpp"

namespace taco {

struct Rgb {
  float r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Fixed class palette; entry 0 is background black.
class Palette {
 public:
  static constexpr int kSize = 16;
  static const Palette& standard();

  const Rgb& operator[](int index) const { return colors_[static_cast<std::size_t>(index)]; }
  // Class ids beyond the palette wrap around, skipping background.
  const Rgb& for_class(int label) const;
  int size() const { return kSize; }
  // Index of an exact color match, or -1.
  int find(const Rgb& color) const;

 private:
  Palette();
  std::array<Rgb, kSize> colors_;
};

// ---- geometric -------------------------------------------------------------

// Counter-clockwise rotation about the image center. Multiples of 90 degrees
// on square images are exact index permutations; other angles use bilinear
// sampling with black outside the frame.
Image rotate(const Image& image, double degrees);
Image hflip(const Image& image);
Image vflip(const Image& image);
// Center crop of side/factor, bilinearly upscaled back; factor >= 1.
Image zoom(const Image& image, double factor);

// ---- photometric -----------------------------------------------------------

Image brightness(const Image& image, double factor);
Image contrast(const Image& image, double factor);
Image invert(const Image& image);
Image to_grayscale(const Image& image);
// Applies the fixed 256-entry colormap to the image luma.
Image false_color(const Image& image);
const std::array<Rgb, 256>& false_color_lut();

// ---- degradations ----------------------------------------------------------

struct Rect {
  int y = 0, x = 0, height = 0, width = 0;
};

Image gaussian_noise(const Image& image, double sigma, Rng& rng);
Image salt_pepper(const Image& image, double p, Rng& rng);
Image downsample(const Image& image, int factor);
Image erase(const Image& image, const std::vector<Rect>& rects);
Image noise_fill(int height, int width, Rng& rng);
Image border_erase(const Image& image, double keep_fraction);

// Reassigns exactly round(fraction * H * W) distinct pixels to a different
// palette color.
Image noisy_segmentation(const Image& segmentation, double fraction, const Palette& palette, Rng& rng);

}  // namespace taco
