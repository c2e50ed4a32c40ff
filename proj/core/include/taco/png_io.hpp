#pragma once

#include <filesystem>

#include "taco/image.hpp"

namespace taco {

// 8-bit RGB PNG. Values are quantized as floor(v * 255 + 0.5).
void write_png_rgb(const std::filesystem::path& path, const Image& image);
Image read_png_rgb(const std::filesystem::path& path);

// 8-bit single-channel PNG; pixel value = class id.
void write_png_mask(const std::filesystem::path& path, const Mask& mask);
Mask read_png_mask(const std::filesystem::path& path);

}  // namespace taco
