#include "taco/semantic.hpp"

#include <algorithm>
#include <cmath>

#include "taco/error.hpp"
#include "taco/morphology.hpp"
#include "taco/raster.hpp"

namespace taco {
namespace {

void paint(Image& img, int y, int x, const Rgb& c) {
  if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return;
  img.set_rgb(y, x, c.r, c.g, c.b);
}

void paint_square(Image& img, int cy, int cx, int half, const Rgb& c) {
  for (int y = cy - half; y <= cy + half; ++y)
    for (int x = cx - half; x <= cx + half; ++x) paint(img, y, x, c);
}

}  // namespace

Image render_segmentation(const Mask& mask) {
  const Palette& palette = Palette::standard();
  Image out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(y, x) != 0) paint(out, y, x, palette.for_class(mask.at(y, x)));
  return out;
}

RenderedPair semantic_render(const Sample& sample, SemanticKind kind, Rng& rng) {
  const Mask& mask = sample.mask;
  const Palette& palette = Palette::standard();
  RenderedPair pair{sample.image, Image(mask.height(), mask.width())};
  if (kind == SemanticKind::kSegmentation) {
    pair.output = render_segmentation(mask);
    return pair;
  }
  if (mask.foreground_count() == 0) throw SkipInstance("semantic render of an empty mask");
  switch (kind) {
    case SemanticKind::kSegmentation:
      break;
    case SemanticKind::kBoxes:
      for (const Component& c : connected_components(mask)) {
        for (int y = c.min_y; y <= c.max_y; ++y)
          for (int x = c.min_x; x <= c.max_x; ++x) paint(pair.output, y, x, palette.for_class(c.label));
      }
      break;
    case SemanticKind::kEdges:
      for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
          const int label = mask.at(y, x);
          if (label == 0) continue;
          auto cls = [&](int yy, int xx) { return mask.in_bounds(yy, xx) ? mask.at(yy, xx) : 0; };
          if (cls(y - 1, x) != label || cls(y + 1, x) != label || cls(y, x - 1) != label || cls(y, x + 1) != label) {
            paint(pair.output, y, x, palette.for_class(label));
          }
        }
      }
      break;
    case SemanticKind::kPoints:
      for (const Component& c : connected_components(mask)) {
        paint_square(pair.output, static_cast<int>(std::lround(c.centroid_y)),
                     static_cast<int>(std::lround(c.centroid_x)), 1, palette.for_class(c.label));
      }
      break;
    case SemanticKind::kInteractive: {
      const std::vector<Component> comps = connected_components(mask);
      const Component& c = comps[uniform_index(rng, comps.size())];
      const auto [py, px] = c.pixels[uniform_index(rng, c.pixels.size())];
      for (auto [y, x] : c.pixels) paint(pair.output, y, x, palette.for_class(c.label));
      paint_square(pair.input, py, px, 2, Rgb{1.0f, 1.0f, 1.0f});
      break;
    }
  }
  return pair;
}

}  // namespace taco
