#include "taco/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taco/error.hpp"

namespace taco {
namespace {

constexpr double kPi = 3.14159265358979323846;

Image rotate90_ccw(const Image& in) {
  const int n = in.width();
  Image out(n, n);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) out.at(c, y, x) = in.at(c, x, n - 1 - y);
  return out;
}

Image rotate180(const Image& in) {
  const int h = in.height();
  const int w = in.width();
  Image out(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = in.at(c, h - 1 - y, w - 1 - x);
  return out;
}

// Bilinear sample with zero padding outside the frame.
float sample_zero(const Image& img, int c, double fy, double fx) {
  const int y0 = static_cast<int>(std::floor(fy));
  const int x0 = static_cast<int>(std::floor(fx));
  const double ty = fy - y0;
  const double tx = fx - x0;
  auto px = [&](int y, int x) -> double {
    if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return 0.0;
    return img.at(c, y, x);
  };
  const double v = (px(y0, x0) * (1 - tx) + px(y0, x0 + 1) * tx) * (1 - ty) +
                   (px(y0 + 1, x0) * (1 - tx) + px(y0 + 1, x0 + 1) * tx) * ty;
  return static_cast<float>(v);
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::array<Rgb, 256> build_lut() {
  // Anchors of a perceptually ordered dark-blue -> green -> yellow ramp.
  static const double anchors[][3] = {{0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
                                      {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
                                      {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
                                      {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
  constexpr int kAnchors = 11;
  std::array<Rgb, 256> lut{};
  for (int i = 0; i < 256; ++i) {
    const double t = i / 255.0 * (kAnchors - 1);
    const int a = std::min(static_cast<int>(t), kAnchors - 2);
    const double f = t - a;
    lut[i] = Rgb{static_cast<float>(anchors[a][0] * (1 - f) + anchors[a + 1][0] * f),
                 static_cast<float>(anchors[a][1] * (1 - f) + anchors[a + 1][1] * f),
                 static_cast<float>(anchors[a][2] * (1 - f) + anchors[a + 1][2] * f)};
  }
  return lut;
}

}  // namespace

Palette::Palette() {
  colors_ = {Rgb{0.0f, 0.0f, 0.0f},       Rgb{0.90f, 0.10f, 0.10f}, Rgb{0.10f, 0.80f, 0.20f},
             Rgb{0.15f, 0.30f, 0.95f},    Rgb{0.95f, 0.85f, 0.10f}, Rgb{0.85f, 0.20f, 0.85f},
             Rgb{0.10f, 0.85f, 0.85f},    Rgb{1.00f, 0.55f, 0.00f}, Rgb{0.55f, 0.25f, 0.05f},
             Rgb{0.60f, 0.90f, 0.40f},    Rgb{0.50f, 0.10f, 0.60f}, Rgb{1.00f, 0.60f, 0.70f},
             Rgb{0.00f, 0.45f, 0.45f},    Rgb{0.75f, 0.75f, 0.75f}, Rgb{0.40f, 0.40f, 0.00f},
             Rgb{0.00f, 0.00f, 0.50f}};
}

const Palette& Palette::standard() {
  static const Palette palette;
  return palette;
}

const Rgb& Palette::for_class(int label) const {
  if (label <= 0) return colors_[0];
  return colors_[static_cast<std::size_t>(1 + (label - 1) % (kSize - 1))];
}

int Palette::find(const Rgb& color) const {
  for (int i = 0; i < kSize; ++i) {
    if (colors_[i] == color) return i;
  }
  return -1;
}

Image rotate(const Image& image, double degrees) {
  double wrapped = std::fmod(degrees, 360.0);
  if (wrapped < 0) wrapped += 360.0;
  const bool square = image.height() == image.width();
  if (square && wrapped == 0.0) return image;
  if (square && wrapped == 90.0) return rotate90_ccw(image);
  if (square && wrapped == 180.0) return rotate180(image);
  if (square && wrapped == 270.0) return rotate90_ccw(rotate180(image));
  if (!square && wrapped == 0.0) return image;
  if (!square && wrapped == 180.0) return rotate180(image);

  const double theta = degrees * kPi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cy = (image.height() - 1) / 2.0;
  const double cx = (image.width() - 1) / 2.0;
  Image out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cx + dx * cs - dy * sn;
      const double sy = cy + dx * sn + dy * cs;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = clamp01(sample_zero(image, c, sy, sx));
    }
  }
  return out;
}

Image hflip(const Image& image) {
  Image out(image.height(), image.width());
  const int w = image.width();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, y, w - 1 - x);
  return out;
}

Image vflip(const Image& image) {
  Image out(image.height(), image.width());
  const int h = image.height();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < image.width(); ++x) out.at(c, y, x) = image.at(c, h - 1 - y, x);
  return out;
}

Image zoom(const Image& image, double factor) {
  if (!(factor >= 1.0)) throw ConfigError("zoom factor must be >= 1");
  const int h = image.height();
  const int w = image.width();
  const double ch = h / factor;
  const double cw = w / factor;
  const double y0 = (h - ch) / 2.0;
  const double x0 = (w - cw) / 2.0;
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp(y0 + (y + 0.5) * ch / h - 0.5, 0.0, h - 1.0);
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp(x0 + (x + 0.5) * cw / w - 0.5, 0.0, w - 1.0);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = clamp01(sample_zero(image, c, fy, fx));
    }
  }
  return out;
}

Image brightness(const Image& image, double factor) {
  if (!(factor > 0)) throw ConfigError("brightness factor must be positive");
  Image out = image;
  const float f = static_cast<float>(factor);
  for (auto& v : out.data()) v = std::clamp(f * v, 0.0f, 1.0f);
  return out;
}

Image contrast(const Image& image, double factor) {
  if (!(factor > 0)) throw ConfigError("contrast factor must be positive");
  const auto& d = image.data();
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  Image out = image;
  for (auto& v : out.data()) v = clamp01(mean + factor * (v - mean));
  return out;
}

Image invert(const Image& image) {
  Image out = image;
  for (auto& v : out.data()) v = 1.0f - v;
  return out;
}

Image to_grayscale(const Image& image) {
  Image out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float l = std::clamp(luma(image, y, x), 0.0f, 1.0f);
      out.set_rgb(y, x, l, l, l);
    }
  }
  return out;
}

const std::array<Rgb, 256>& false_color_lut() {
  static const std::array<Rgb, 256> lut = build_lut();
  return lut;
}

Image false_color(const Image& image) {
  const auto& lut = false_color_lut();
  Image out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const int idx = static_cast<int>(std::floor(std::clamp(luma(image, y, x), 0.0f, 1.0f) * 255.0f + 0.5f));
      const Rgb& c = lut[static_cast<std::size_t>(idx)];
      out.set_rgb(y, x, c.r, c.g, c.b);
    }
  }
  return out;
}

Image gaussian_noise(const Image& image, double sigma, Rng& rng) {
  if (!(sigma > 0)) throw ConfigError("gaussian sigma must be positive");
  Image out = image;
  for (auto& v : out.data()) v = clamp01(v + sigma * standard_normal(rng));
  return out;
}

Image salt_pepper(const Image& image, double p, Rng& rng) {
  if (!(p > 0 && p <= 0.5)) throw ConfigError("salt-and-pepper probability must be in (0, 0.5]");
  Image out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double u = uniform01(rng);
      if (u < p / 2) {
        out.set_rgb(y, x, 0.0f, 0.0f, 0.0f);
      } else if (u < p) {
        out.set_rgb(y, x, 1.0f, 1.0f, 1.0f);
      }
    }
  }
  return out;
}

Image downsample(const Image& image, int factor) {
  if (factor != 2 && factor != 4 && factor != 8) throw ConfigError("downsample factor must be 2, 4 or 8");
  Image out(image.height(), image.width());
  for (int c = 0; c < 3; ++c) {
    for (int by = 0; by < image.height(); by += factor) {
      for (int bx = 0; bx < image.width(); bx += factor) {
        const int ey = std::min(by + factor, image.height());
        const int ex = std::min(bx + factor, image.width());
        double sum = 0.0;
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) sum += image.at(c, y, x);
        const auto v = static_cast<float>(sum / ((ey - by) * (ex - bx)));
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) out.at(c, y, x) = v;
      }
    }
  }
  return out;
}

Image erase(const Image& image, const std::vector<Rect>& rects) {
  Image out = image;
  for (const Rect& r : rects) {
    if (r.y < 0 || r.x < 0 || r.height <= 0 || r.width <= 0 || r.y + r.height > image.height() ||
        r.x + r.width > image.width()) {
      throw ConfigError("erase rectangle outside image bounds");
    }
    for (int y = r.y; y < r.y + r.height; ++y)
      for (int x = r.x; x < r.x + r.width; ++x) out.set_rgb(y, x, 0.5f, 0.5f, 0.5f);
  }
  return out;
}

Image noise_fill(int height, int width, Rng& rng) {
  Image out(height, width);
  for (auto& v : out.data()) v = static_cast<float>(uniform01(rng));
  return out;
}

Image border_erase(const Image& image, double keep_fraction) {
  if (!(keep_fraction > 0 && keep_fraction < 1)) throw ConfigError("keep fraction must be in (0, 1)");
  const int kh = static_cast<int>(std::lround(keep_fraction * image.height()));
  const int kw = static_cast<int>(std::lround(keep_fraction * image.width()));
  const int y0 = (image.height() - kh) / 2;
  const int x0 = (image.width() - kw) / 2;
  Image out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const bool keep = y >= y0 && y < y0 + kh && x >= x0 && x < x0 + kw;
      if (!keep) out.set_rgb(y, x, 0.5f, 0.5f, 0.5f);
    }
  }
  return out;
}

Image noisy_segmentation(const Image& segmentation, double fraction, const Palette& palette, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("noise fraction must be in [0, 1]");
  const int h = segmentation.height();
  const int w = segmentation.width();
  const std::size_t total = static_cast<std::size_t>(h) * w;
  const auto changes = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `changes` entries are a uniform subset.
  for (std::size_t i = 0; i < changes; ++i) std::swap(order[i], order[i + uniform_index(rng, total - i)]);
  Image out = segmentation;
  for (std::size_t i = 0; i < changes; ++i) {
    const int y = static_cast<int>(order[i] / w);
    const int x = static_cast<int>(order[i] % w);
    const Rgb current{segmentation.at(0, y, x), segmentation.at(1, y, x), segmentation.at(2, y, x)};
    const int current_index = palette.find(current);
    int pick;
    if (current_index < 0) {
      pick = static_cast<int>(uniform_index(rng, palette.size()));
    } else {
      pick = static_cast<int>(uniform_index(rng, palette.size() - 1));
      if (pick >= current_index) ++pick;
    }
    const Rgb& c = palette[pick];
    out.set_rgb(y, x, c.r, c.g, c.b);
  }
  return out;
}

}  // namespace taco
