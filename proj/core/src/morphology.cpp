#include "taco/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "taco/error.hpp"
#include "taco/raster.hpp"

namespace taco {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

constexpr double kFar = 1e12;

// 1D squared distance transform over the lower envelope of parabolas
// (Felzenszwalb & Huttenlocher). Background samples carry kFar.
void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
  };
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = diff * diff + f[v[k]];
  }
}

void paint(Image& img, int y, int x, const Rgb& c) { img.set_rgb(y, x, c.r, c.g, c.b); }

Image replicate(const Field& f, double scale) {
  Image out(f.height, f.width);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const auto v = static_cast<float>(std::clamp(f.at(y, x) * scale, 0.0, 1.0));
      out.set_rgb(y, x, v, v, v);
    }
  }
  return out;
}

}  // namespace

std::vector<Component> connected_components(const Mask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<int> seen(static_cast<std::size_t>(h) * w, 0);
  std::vector<Component> out;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = mask.at(y, x);
      if (label == 0 || seen[static_cast<std::size_t>(y) * w + x]) continue;
      Component comp;
      comp.label = label;
      comp.min_y = comp.max_y = y;
      comp.min_x = comp.max_x = x;
      stack.assign(1, {y, x});
      seen[static_cast<std::size_t>(y) * w + x] = 1;
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        comp.pixels.emplace_back(cy, cx);
        for (int k = 0; k < 8; ++k) {
          const int ny = cy + kDy8[k];
          const int nx = cx + kDx8[k];
          if (!mask.in_bounds(ny, nx) || mask.at(ny, nx) != label) continue;
          int& s = seen[static_cast<std::size_t>(ny) * w + nx];
          if (s) continue;
          s = 1;
          stack.emplace_back(ny, nx);
        }
      }
      double sy = 0, sx = 0;
      for (auto [py, px] : comp.pixels) {
        sy += py;
        sx += px;
        comp.min_y = std::min(comp.min_y, py);
        comp.max_y = std::max(comp.max_y, py);
        comp.min_x = std::min(comp.min_x, px);
        comp.max_x = std::max(comp.max_x, px);
      }
      comp.centroid_y = sy / static_cast<double>(comp.pixels.size());
      comp.centroid_x = sx / static_cast<double>(comp.pixels.size());
      out.push_back(std::move(comp));
    }
  }
  return out;
}

Field euclidean_distance_to_foreground(const Mask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  if (mask.foreground_count() == 0) throw SkipInstance("distance transform of an empty mask");
  Field sq(h, w);
  const int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  // Columns first.
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask.at(y, x) != 0 ? 0.0 : kFar;
    dt1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq.at(y, x) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq.at(y, x);
    dt1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq.at(y, x) = std::sqrt(d[x]);
  }
  return sq;
}

Mask zhang_suen_thin(const Mask& binary) {
  const int h = binary.height();
  const int w = binary.width();
  Mask img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(y, x) = binary.at(y, x) != 0 ? 1 : 0;
  const std::vector<Component> original = connected_components(img);

  auto px = [&](int y, int x) -> int { return img.in_bounds(y, x) ? img.at(y, x) : 0; };
  std::vector<std::pair<int, int>> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      marked.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!img.at(y, x)) continue;
          // P2..P9 clockwise from north.
          const int p[8] = {px(y - 1, x), px(y - 1, x + 1), px(y, x + 1), px(y + 1, x + 1),
                            px(y + 1, x), px(y + 1, x - 1), px(y, x - 1), px(y - 1, x - 1)};
          int b = 0, a = 0;
          for (int k = 0; k < 8; ++k) {
            b += p[k];
            if (p[k] == 0 && p[(k + 1) % 8] == 1) ++a;
          }
          if (b < 2 || b > 6 || a != 1) continue;
          const bool cond = step == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                      : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (cond) marked.emplace_back(y, x);
        }
      }
      for (auto [y, x] : marked) img.at(y, x) = 0;
      if (!marked.empty()) changed = true;
    }
  }
  // Parallel deletion can erase 2x2 blocks and two-pixel diagonals outright.
  for (const Component& comp : original) {
    const bool survives = std::any_of(comp.pixels.begin(), comp.pixels.end(),
                                      [&](const auto& p) { return img.at(p.first, p.second) != 0; });
    if (survives) continue;
    auto best = comp.pixels.front();
    double best_d = kInf;
    for (const auto& p : comp.pixels) {
      const double d = std::hypot(p.first - comp.centroid_y, p.second - comp.centroid_x);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    img.at(best.first, best.second) = 1;
  }
  return img;
}

std::vector<std::pair<int, int>> fill_convex_hull(const std::vector<std::pair<int, int>>& points, int height,
                                                  int width) {
  if (points.empty()) return {};
  // Andrew's monotone chain over (x, y).
  std::vector<std::pair<long, long>> pts;
  pts.reserve(points.size());
  for (auto [y, x] : points) pts.emplace_back(x, y);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](const auto& o, const auto& a, const auto& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<long, long>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k > 1 ? k - 1 : k);

  long min_x = pts.front().first, max_x = pts.back().first;
  long min_y = pts.front().second, max_y = pts.front().second;
  for (const auto& p : pts) {
    min_y = std::min(min_y, p.second);
    max_y = std::max(max_y, p.second);
  }
  std::vector<std::pair<int, int>> out;
  if (hull.size() < 3) {
    // Degenerate hull: a point or a segment. Rasterize the segment.
    const auto& a = pts.front();
    const auto& b = pts.back();
    const long steps = std::max(std::abs(b.first - a.first), std::abs(b.second - a.second));
    for (long s = 0; s <= steps; ++s) {
      const double t = steps == 0 ? 0.0 : static_cast<double>(s) / steps;
      const int x = static_cast<int>(std::lround(a.first + t * (b.first - a.first)));
      const int y = static_cast<int>(std::lround(a.second + t * (b.second - a.second)));
      out.emplace_back(y, x);
    }
    return out;
  }
  for (long y = std::max(0L, min_y); y <= std::min<long>(height - 1, max_y); ++y) {
    for (long x = std::max(0L, min_x); x <= std::min<long>(width - 1, max_x); ++x) {
      bool inside = true;
      for (std::size_t i = 0; i < hull.size() && inside; ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        if (cross(a, b, std::pair<long, long>{x, y}) < 0) inside = false;
      }
      if (inside) out.emplace_back(static_cast<int>(y), static_cast<int>(x));
    }
  }
  return out;
}

Field geodesic_distance(const Field& intensity, const std::vector<std::pair<int, int>>& seeds, double lambda,
                        int iterations) {
  const int h = intensity.height;
  const int w = intensity.width;
  Field dist(h, w, kInf);
  for (auto [y, x] : seeds) {
    if (y >= 0 && x >= 0 && y < h && x < w) dist.at(y, x) = 0.0;
  }
  const double sqrt2 = std::sqrt(2.0);
  // Forward neighbors: (dy, dx) above or to the left.
  constexpr int kFy[4] = {-1, -1, -1, 0};
  constexpr int kFx[4] = {-1, 0, 1, -1};
  auto relax = [&](int y, int x, int dy, int dx) {
    const int ny = y + dy;
    const int nx = x + dx;
    if (ny < 0 || nx < 0 || ny >= h || nx >= w) return;
    const double step = (dy != 0 && dx != 0) ? sqrt2 : 1.0;
    const double cost = lambda * std::abs(intensity.at(y, x) - intensity.at(ny, nx)) + (1.0 - lambda) * step;
    const double cand = dist.at(ny, nx) + cost;
    if (cand < dist.at(y, x)) dist.at(y, x) = cand;
  };
  for (int it = 0; it < iterations; ++it) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < 4; ++k) relax(y, x, kFy[k], kFx[k]);
    for (int y = h - 1; y >= 0; --y)
      for (int x = w - 1; x >= 0; --x)
        for (int k = 0; k < 4; ++k) relax(y, x, -kFy[k], -kFx[k]);
  }
  return dist;
}

Image render_distance_map(const Mask& mask) {
  const Field d = euclidean_distance_to_foreground(mask);
  const double diag = std::sqrt(static_cast<double>(mask.height()) * mask.height() +
                                static_cast<double>(mask.width()) * mask.width());
  return replicate(d, 1.0 / diag);
}

Image render_skeleton(const Mask& mask) {
  if (mask.foreground_count() == 0) throw SkipInstance("skeleton of an empty mask");
  const Palette& palette = Palette::standard();
  Image out(mask.height(), mask.width());
  const int classes = mask.max_label();
  for (int label = 1; label <= classes; ++label) {
    Mask binary(mask.height(), mask.width());
    bool any = false;
    for (std::size_t i = 0; i < binary.labels().size(); ++i) {
      if (mask.labels()[i] == label) {
        binary.labels()[i] = 1;
        any = true;
      }
    }
    if (!any) continue;
    const Mask thin = zhang_suen_thin(binary);
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (thin.at(y, x)) paint(out, y, x, palette.for_class(label));
  }
  return out;
}

Image render_hulls(const Mask& mask) {
  if (mask.foreground_count() == 0) throw SkipInstance("convex hull of an empty mask");
  const Palette& palette = Palette::standard();
  Image out(mask.height(), mask.width());
  const int classes = mask.max_label();
  for (int label = 1; label <= classes; ++label) {
    std::vector<std::pair<int, int>> points;
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (mask.at(y, x) == label) points.emplace_back(y, x);
    for (auto [y, x] : fill_convex_hull(points, mask.height(), mask.width())) paint(out, y, x, palette.for_class(label));
  }
  return out;
}

Image render_geodesic(const Image& image, const Mask& mask, double lambda) {
  const std::vector<Component> comps = connected_components(mask);
  if (comps.empty()) throw SkipInstance("geodesic distance needs at least one object");
  std::vector<std::pair<int, int>> seeds;
  for (const auto& c : comps) {
    seeds.emplace_back(static_cast<int>(std::lround(c.centroid_y)), static_cast<int>(std::lround(c.centroid_x)));
  }
  Field intensity(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) intensity.at(y, x) = luma(image, y, x);
  const Field d = geodesic_distance(intensity, seeds, lambda);
  double max_d = 0.0;
  for (double v : d.values)
    if (std::isfinite(v)) max_d = std::max(max_d, v);
  return replicate(d, max_d > 0 ? 1.0 / max_d : 0.0);
}

}  // namespace taco
