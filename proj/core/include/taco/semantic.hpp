#pragma once

#include <utility>

#include "taco/corpus.hpp"
#include "taco/image.hpp"
#include "taco/rng.hpp"

namespace taco {

enum class SemanticKind { kSegmentation, kBoxes, kEdges, kPoints, kInteractive };

struct RenderedPair {
  Image input;
  Image output;
};

// Renders a class-colored structure derived from the sample mask. Throws
// SkipInstance when the mask has no foreground (segmentation excepted: an
// all-background mask renders to black).
RenderedPair semantic_render(const Sample& sample, SemanticKind kind, Rng& rng);

// Class-colored mask, palette index 0 (black) for background.
Image render_segmentation(const Mask& mask);

}  // namespace taco
