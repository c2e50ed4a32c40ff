#include "taco/image.hpp"

#include <algorithm>
#include <cmath>

namespace taco {

Image::Image(int height, int width, float fill)
    : height_(height), width_(width), data_(static_cast<std::size_t>(kChannels) * height * width, fill) {}

int Mask::max_label() const {
  int m = 0;
  for (auto v : labels_) m = std::max<int>(m, v);
  return m;
}

std::size_t Mask::foreground_count() const {
  return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](auto v) { return v != 0; }));
}

float luma(const Image& image, int y, int x) {
  return 0.299f * image.at(0, y, x) + 0.587f * image.at(1, y, x) + 0.114f * image.at(2, y, x);
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (height == image.height() && width == image.width()) return image;
  Image out(height, width);
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  const int h_max = image.height() - 1;
  const int w_max = image.width() - 1;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h_max));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h_max);
    const float ty = static_cast<float>(fy - y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w_max));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w_max);
      const float tx = static_cast<float>(fx - x0);
      for (int c = 0; c < Image::kChannels; ++c) {
        const float a = image.at(c, y0, x0);
        const float b = image.at(c, y0, x1);
        const float d = image.at(c, y1, x0);
        const float e = image.at(c, y1, x1);
        const float top = a + (b - a) * tx;
        const float bottom = d + (e - d) * tx;
        out.at(c, y, x) = top + (bottom - top) * ty;
      }
    }
  }
  return out;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& v : out.data()) v = std::floor(v * 255.0f + 0.5f) / 255.0f;
  return out;
}

bool all_finite_unit(const Image& image) {
  return std::all_of(image.data().begin(), image.data().end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

}  // namespace taco
