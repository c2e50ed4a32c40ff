#pragma once

#include <cstdint>
#include <vector>

namespace taco {

// Planar 3-channel raster with values in [0, 1]. Channel-major storage
// (c, y, x) so an image maps directly onto a tensor slice.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  float& at(int c, int y, int x) { return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x]; }
  float at(int c, int y, int x) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  void set_rgb(int y, int x, float r, float g, float b) {
    at(0, y, x) = r;
    at(1, y, x) = g;
    at(2, y, x) = b;
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool operator==(const Image& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Single-channel class-id map; 0 is background.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 0)
      : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t& at(int y, int x) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  bool in_bounds(int y, int x) const { return y >= 0 && x >= 0 && y < height_ && x < width_; }

  std::vector<std::uint8_t>& labels() { return labels_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  int max_label() const;
  std::size_t foreground_count() const;

  bool operator==(const Mask& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
};

// ITU-R BT.601 luma.
float luma(const Image& image, int y, int x);

// Bilinear resampling with half-pixel centers. Same-size input is copied
// bit-exactly.
Image resize_bilinear(const Image& image, int height, int width);

// Quantize every value to the nearest multiple of 1/255.
Image quantize8(const Image& image);

bool all_finite_unit(const Image& image);

}  // namespace taco
