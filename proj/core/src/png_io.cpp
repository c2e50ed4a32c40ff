#include "taco/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "taco/error.hpp"

namespace taco {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

void png_warn(png_structp, png_const_charp) {}

// libpng reports errors through longjmp; keep these helpers free of objects
// with non-trivial destructors between setjmp and the libpng calls.
bool write_rows_raw(std::FILE* f, int width, int height, int color_type, const png_byte* pixels, int channels) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels + static_cast<std::size_t>(y) * width * channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_rows(const std::filesystem::path& path, int width, int height, int color_type,
                const std::vector<png_byte>& pixels, int channels) {
  FilePtr f = open_file(path, "wb");
  if (!write_rows_raw(f.get(), width, height, color_type, pixels.data(), channels)) {
    throw DataError("failed to encode " + path.string());
  }
}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<png_byte> pixels;
};

struct ReadHeader {
  png_structp png = nullptr;
  png_infop info = nullptr;
};

bool read_header(std::FILE* f, ReadHeader& h, int& width, int& height, int& channels, std::size_t& row_bytes) {
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  if (!h.png) return false;
  h.info = png_create_info_struct(h.png);
  if (!h.info || setjmp(png_jmpbuf(h.png))) return false;
  png_init_io(h.png, f);
  png_read_info(h.png, h.info);
  const int bit_depth = png_get_bit_depth(h.png, h.info);
  const int color_type = png_get_color_type(h.png, h.info);
  if (bit_depth == 16) png_set_strip_16(h.png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(h.png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(h.png);
  png_read_update_info(h.png, h.info);
  width = static_cast<int>(png_get_image_width(h.png, h.info));
  height = static_cast<int>(png_get_image_height(h.png, h.info));
  channels = png_get_channels(h.png, h.info);
  row_bytes = png_get_rowbytes(h.png, h.info);
  return true;
}

bool read_body(ReadHeader& h, png_bytep* rows) {
  if (setjmp(png_jmpbuf(h.png))) return false;
  png_read_image(h.png, rows);
  png_read_end(h.png, nullptr);
  return true;
}

Decoded read_rows(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  ReadHeader h;
  Decoded out;
  std::size_t row_bytes = 0;
  bool ok = read_header(f.get(), h, out.width, out.height, out.channels, row_bytes);
  if (ok) {
    out.pixels.resize(row_bytes * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.pixels.data() + row_bytes * y;
    ok = read_body(h, rows.data());
  }
  png_destroy_read_struct(&h.png, h.info ? &h.info : nullptr, nullptr);
  if (!ok) throw DataError("failed to decode " + path.string());
  return out;
}

png_byte to_byte(float v) {
  const float q = std::floor(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
  return static_cast<png_byte>(q);
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Image& image) {
  const int h = image.height();
  const int w = image.width();
  std::vector<png_byte> pixels(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(image.at(c, y, x));
    }
  }
  write_rows(path, w, h, PNG_COLOR_TYPE_RGB, pixels, 3);
}

Image read_png_rgb(const std::filesystem::path& path) {
  Decoded d = read_rows(path);
  Image image(d.height, d.width);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * d.width + x) * d.channels;
      for (int c = 0; c < 3; ++c) {
        const int src = d.channels >= 3 ? c : 0;
        image.at(c, y, x) = static_cast<float>(d.pixels[base + src]) / 255.0f;
      }
    }
  }
  return image;
}

void write_png_mask(const std::filesystem::path& path, const Mask& mask) {
  std::vector<png_byte> pixels(mask.labels().begin(), mask.labels().end());
  write_rows(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, pixels, 1);
}

Mask read_png_mask(const std::filesystem::path& path) {
  Decoded d = read_rows(path);
  if (d.channels != 1) throw DataError("mask is not single-channel: " + path.string());
  Mask mask(d.height, d.width);
  std::copy(d.pixels.begin(), d.pixels.end(), mask.labels().begin());
  return mask;
}

}  // namespace taco
