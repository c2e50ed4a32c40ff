#pragma once

#include <cstdint>
#include <vector>

#include "taco/image.hpp"

namespace taco {

// Dense H x W field of doubles, row-major.
struct Field {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Field() = default;
  Field(int h, int w, double fill = 0.0) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct Component {
  int label = 0;
  std::vector<std::pair<int, int>> pixels;  // (y, x)
  int min_y = 0, min_x = 0, max_y = 0, max_x = 0;
  double centroid_y = 0, centroid_x = 0;
};

// 8-connected components of equal nonzero class id, in raster order of their
// first pixel.
std::vector<Component> connected_components(const Mask& mask);

// Distance from every pixel to the nearest nonzero pixel (exact Euclidean,
// separable lower-envelope algorithm). Throws SkipInstance on an empty mask.
Field euclidean_distance_to_foreground(const Mask& mask);

// Zhang-Suen thinning of a binary mask (nonzero = foreground). Components that
// the parallel sub-iterations would erase entirely keep one pixel.
Mask zhang_suen_thin(const Mask& binary);

// Pixel centers (y, x) inside the convex hull of the given points, inclusive.
std::vector<std::pair<int, int>> fill_convex_hull(const std::vector<std::pair<int, int>>& points, int height,
                                                  int width);

// Raster-scan geodesic distance from seed pixels over `intensity`.
// Step cost between 8-neighbors p, q: lambda * |I(p) - I(q)| + (1 - lambda) * |p - q|.
Field geodesic_distance(const Field& intensity, const std::vector<std::pair<int, int>>& seeds, double lambda,
                        int iterations = 2);

// Rendered fields (3-channel, values in [0, 1]).
Image render_distance_map(const Mask& mask);
Image render_skeleton(const Mask& mask);
Image render_hulls(const Mask& mask);
// Seeds at the rounded centroid of every component; normalized by the max.
Image render_geodesic(const Image& image, const Mask& mask, double lambda);

}  // namespace taco
