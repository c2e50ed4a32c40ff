#include "taco/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>

#include "taco/error.hpp"

namespace taco::nn {
namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

struct ConvGeom {
  int n, cin, h, w, cout, k, stride, pad, ho, wo;
  std::size_t rows() const { return static_cast<std::size_t>(cin) * k * k; }
  std::size_t plane() const { return static_cast<std::size_t>(ho) * wo; }
  std::size_t cols() const { return static_cast<std::size_t>(n) * plane(); }
};

ConvGeom conv_geom(const Tensor4& x, const Tensor4& weight, int stride, int pad) {
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d: padding must be >= 0");
  if (weight.c() != x.c()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) + " channels, weight expects " +
                     std::to_string(weight.c()));
  }
  if (weight.h() != weight.w()) throw ShapeError("conv2d: kernel must be square");
  ConvGeom g{x.n(), x.c(), x.h(), x.w(), weight.n(), weight.h(), stride, pad, 0, 0};
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  return g;
}

// Column matrix (Cin*K*K) x (N*Ho*Wo), row-major; column n*Ho*Wo + p.
void im2col(const Tensor4& x, const ConvGeom& g, std::vector<float>& col) {
  col.assign(g.rows() * g.cols(), 0.0f);
  const std::size_t ncols = g.cols();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < static_cast<int>(g.rows()); ++r) {
    const int c = r / (g.k * g.k);
    const int ky = (r / g.k) % g.k;
    const int kx = r % g.k;
    float* dst_row = col.data() + static_cast<std::size_t>(r) * ncols;
    for (int n = 0; n < g.n; ++n) {
      const float* src = x.data() + (static_cast<std::size_t>(n) * g.cin + c) * g.h * g.w;
      float* dst = dst_row + static_cast<std::size_t>(n) * g.plane();
      for (int oy = 0; oy < g.ho; ++oy) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.h) continue;
        for (int ox = 0; ox < g.wo; ++ox) {
          const int ix = ox * g.stride - g.pad + kx;
          if (ix >= 0 && ix < g.w) dst[oy * g.wo + ox] = src[iy * g.w + ix];
        }
      }
    }
  }
}

void col2im(const std::vector<float>& col, const ConvGeom& g, Tensor4& dx) {
  const std::size_t ncols = g.cols();
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < g.n * g.cin; ++nc) {
    const int n = nc / g.cin;
    const int c = nc % g.cin;
    float* dst = dx.data() + (static_cast<std::size_t>(n) * g.cin + c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const int r = (c * g.k + ky) * g.k + kx;
        const float* src = col.data() + static_cast<std::size_t>(r) * ncols + static_cast<std::size_t>(n) * g.plane();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[iy * g.w + ix] += src[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

void require_same(const Tensor4& a, const Tensor4& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride, int pad) {
  const ConvGeom g = conv_geom(x, weight, stride, pad);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(g.cout)) throw ShapeError("conv2d: bias size");
  std::vector<float> col;
  im2col(x, g, col);
  MatRM out_mat = CMapRM(weight.data(), g.cout, static_cast<Eigen::Index>(g.rows())) *
                  CMapRM(col.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
  Tensor4 y(g.n, g.cout, g.ho, g.wo);
  const std::size_t plane = g.plane();
  for (int n = 0; n < g.n; ++n) {
    for (int co = 0; co < g.cout; ++co) {
      const float b = bias.empty() ? 0.0f : bias[co];
      const float* src = out_mat.data() + static_cast<std::size_t>(co) * g.cols() + n * plane;
      float* dst = y.data() + (static_cast<std::size_t>(n) * g.cout + co) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + b;
    }
  }
  check_finite(y, "conv2d");
  return y;
}

ConvGrads conv2d_backward(const Tensor4& x, const Tensor4& weight, bool has_bias, const Tensor4& dy, int stride,
                          int pad, bool need_dx) {
  const ConvGeom g = conv_geom(x, weight, stride, pad);
  if (!(dy.shape() == Shape4{g.n, g.cout, g.ho, g.wo})) throw ShapeError("conv2d backward: dy shape " + dy.shape().str());
  const std::size_t plane = g.plane();
  MatRM dy_mat(g.cout, static_cast<Eigen::Index>(g.cols()));
  for (int n = 0; n < g.n; ++n) {
    for (int co = 0; co < g.cout; ++co) {
      const float* src = dy.data() + (static_cast<std::size_t>(n) * g.cout + co) * plane;
      std::copy(src, src + plane, dy_mat.data() + static_cast<std::size_t>(co) * g.cols() + n * plane);
    }
  }
  std::vector<float> col;
  im2col(x, g, col);
  const CMapRM col_map(col.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));

  ConvGrads grads;
  grads.dweight = Tensor4(weight.shape());
  MapRM(grads.dweight.data(), g.cout, static_cast<Eigen::Index>(g.rows())).noalias() = dy_mat * col_map.transpose();
  if (has_bias) {
    grads.dbias = Tensor4(1, g.cout, 1, 1);
    for (int co = 0; co < g.cout; ++co) {
      double s = 0.0;
      const float* row = dy_mat.data() + static_cast<std::size_t>(co) * g.cols();
      for (std::size_t i = 0; i < g.cols(); ++i) s += row[i];
      grads.dbias[co] = static_cast<float>(s);
    }
  }
  if (need_dx) {
    MapRM col_grad(col.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    col_grad.noalias() = CMapRM(weight.data(), g.cout, static_cast<Eigen::Index>(g.rows())).transpose() * dy_mat;
    grads.dx = Tensor4(x.shape());
    col2im(col, g, grads.dx);
  }
  return grads;
}

Tensor4 batchnorm_forward(const Tensor4& x, const Tensor4& gamma, const Tensor4& beta, RunningStats& running,
                          Mode mode, BatchNormCache* cache) {
  const int n = x.n(), c = x.c();
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c) ||
      running.mean.size() != static_cast<std::size_t>(c)) {
    throw ShapeError("batchnorm: parameter size does not match channels");
  }
  if (mode == Mode::kTrain && n < 2) throw NumericError("batchnorm: training mode needs a batch of at least 2");
  Tensor4 y(x.shape());
  Tensor4 xhat(x.shape());
  std::vector<float> inv_std(c);
  const double count = static_cast<double>(n) * plane;
  for (int ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) s += p[k];
      }
      mean = s / count;
      double ss = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) ss += (p[k] - mean) * (p[k] - mean);
      }
      var = ss / count;
      const double unbiased = count > 1 ? ss / (count - 1) : var;
      running.mean[ch] = static_cast<float>((1 - kBatchNormMomentum) * running.mean[ch] + kBatchNormMomentum * mean);
      running.var[ch] = static_cast<float>((1 - kBatchNormMomentum) * running.var[ch] + kBatchNormMomentum * unbiased);
    } else {
      mean = running.mean[ch];
      var = running.var[ch];
    }
    const double istd = 1.0 / std::sqrt(var + kBatchNormEps);
    inv_std[ch] = static_cast<float>(istd);
    const float g = gamma[ch], b = beta[ch];
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const auto xh = static_cast<float>((x[off + k] - mean) * istd);
        xhat[off + k] = xh;
        y[off + k] = g * xh + b;
      }
    }
  }
  check_finite(y, "batchnorm");
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

BatchNormGrads batchnorm_backward(const Tensor4& dy, const BatchNormCache& cache, const Tensor4& gamma) {
  require_same(dy, cache.xhat, "batchnorm backward");
  const int n = dy.n(), c = dy.c();
  const std::size_t plane = static_cast<std::size_t>(dy.h()) * dy.w();
  const double count = static_cast<double>(n) * plane;
  BatchNormGrads g{Tensor4(dy.shape()), Tensor4(1, c, 1, 1), Tensor4(1, c, 1, 1)};
  for (int ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum_dy += dy[off + k];
        sum_dy_xhat += static_cast<double>(dy[off + k]) * cache.xhat[off + k];
      }
    }
    g.dgamma[ch] = static_cast<float>(sum_dy_xhat);
    g.dbeta[ch] = static_cast<float>(sum_dy);
    const double scale = gamma[ch] * cache.inv_std[ch];
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        if (cache.mode == Mode::kTrain) {
          g.dx[off + k] = static_cast<float>(scale * (dy[off + k] - sum_dy / count - cache.xhat[off + k] * sum_dy_xhat / count));
        } else {
          g.dx[off + k] = static_cast<float>(scale * dy[off + k]);
        }
      }
    }
  }
  return g;
}

Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return y;
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& dy) {
  require_same(x, dy, "relu backward");
  Tensor4 dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
  return dx;
}

Tensor4 maxpool2_forward(const Tensor4& x, MaxPoolCache* cache) {
  const int ho = x.h() / 2, wo = x.w() / 2;
  if (ho == 0 || wo == 0) throw ShapeError("maxpool2: input smaller than window");
  Tensor4 y(x.n(), x.c(), ho, wo);
  std::vector<std::size_t> argmax(y.size());
  std::size_t out = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * x.c() + c) * x.h() * x.w();
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++out) {
          std::size_t best = base + static_cast<std::size_t>(2 * oy) * x.w() + 2 * ox;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = base + static_cast<std::size_t>(2 * oy + dy) * x.w() + 2 * ox + dx;
              if (x[idx] > x[best]) best = idx;
            }
          }
          y[out] = x[best];
          argmax[out] = best;
        }
      }
    }
  }
  if (cache) {
    cache->input_shape = x.shape();
    cache->argmax = std::move(argmax);
  }
  return y;
}

Tensor4 maxpool2_backward(const Tensor4& dy, const MaxPoolCache& cache) {
  if (dy.size() != cache.argmax.size()) throw ShapeError("maxpool2 backward: dy shape " + dy.shape().str());
  Tensor4 dx(cache.input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[cache.argmax[i]] += dy[i];
  return dx;
}

Tensor4 global_avg_pool_forward(const Tensor4& x) {
  Tensor4 y(x.n(), x.c(), 1, 1);
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  for (int i = 0; i < x.n() * x.c(); ++i) {
    double s = 0.0;
    const float* p = x.data() + static_cast<std::size_t>(i) * plane;
    for (std::size_t k = 0; k < plane; ++k) s += p[k];
    y[i] = static_cast<float>(s / static_cast<double>(plane));
  }
  return y;
}

Tensor4 global_avg_pool_backward(const Tensor4& dy, const Shape4& input_shape) {
  if (dy.size() != static_cast<std::size_t>(input_shape.n) * input_shape.c) {
    throw ShapeError("global_avg_pool backward: dy shape " + dy.shape().str());
  }
  Tensor4 dx(input_shape);
  const std::size_t plane = static_cast<std::size_t>(input_shape.h) * input_shape.w;
  const float inv = 1.0f / static_cast<float>(plane);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    float* p = dx.data() + i * plane;
    for (std::size_t k = 0; k < plane; ++k) p[k] = dy[i] * inv;
  }
  return dx;
}

Tensor4 residual_add(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "residual_add");
  Tensor4 y = a;
  y += b;
  return y;
}

Tensor4 linear_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias) {
  const auto in = static_cast<Eigen::Index>(x.item_size());
  const int out = weight.n();
  if (weight.item_size() != static_cast<std::size_t>(in)) {
    throw ShapeError("linear: input width " + std::to_string(in) + " vs weight " + weight.shape().str());
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out)) throw ShapeError("linear: bias size");
  Tensor4 y(x.n(), out, 1, 1);
  MapRM ym(y.data(), x.n(), out);
  ym.noalias() = CMapRM(x.data(), x.n(), in) * CMapRM(weight.data(), out, in).transpose();
  if (!bias.empty()) {
    for (int i = 0; i < x.n(); ++i)
      for (int o = 0; o < out; ++o) ym(i, o) += bias[o];
  }
  check_finite(y, "linear");
  return y;
}

LinearGrads linear_backward(const Tensor4& x, const Tensor4& weight, const Tensor4& dy) {
  const auto in = static_cast<Eigen::Index>(x.item_size());
  const int out = weight.n();
  if (dy.n() != x.n() || dy.item_size() != static_cast<std::size_t>(out)) {
    throw ShapeError("linear backward: dy shape " + dy.shape().str());
  }
  LinearGrads g{Tensor4(x.shape()), Tensor4(weight.shape()), Tensor4(1, out, 1, 1)};
  const CMapRM dym(dy.data(), x.n(), out);
  MapRM(g.dx.data(), x.n(), in).noalias() = dym * CMapRM(weight.data(), out, in);
  MapRM(g.dweight.data(), out, in).noalias() = dym.transpose() * CMapRM(x.data(), x.n(), in);
  for (int o = 0; o < out; ++o) {
    double s = 0.0;
    for (int i = 0; i < x.n(); ++i) s += dym(i, o);
    g.dbias[o] = static_cast<float>(s);
  }
  return g;
}

Tensor4 l2_normalize_forward(const Tensor4& x) {
  Tensor4 y(x.shape());
  const std::size_t d = x.item_size();
  for (int i = 0; i < x.n(); ++i) {
    const float* p = x.data() + i * d;
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) ss += static_cast<double>(p[k]) * p[k];
    const double norm = std::max(std::sqrt(ss), static_cast<double>(kL2Eps));
    for (std::size_t k = 0; k < d; ++k) y[i * d + k] = static_cast<float>(p[k] / norm);
  }
  return y;
}

Tensor4 l2_normalize_backward(const Tensor4& x, const Tensor4& y, const Tensor4& dy) {
  require_same(x, dy, "l2_normalize backward");
  Tensor4 dx(x.shape());
  const std::size_t d = x.item_size();
  for (int i = 0; i < x.n(); ++i) {
    double ss = 0.0, dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      ss += static_cast<double>(x[i * d + k]) * x[i * d + k];
      dot += static_cast<double>(y[i * d + k]) * dy[i * d + k];
    }
    const double norm = std::sqrt(ss);
    if (norm > kL2Eps) {
      for (std::size_t k = 0; k < d; ++k) dx[i * d + k] = static_cast<float>((dy[i * d + k] - y[i * d + k] * dot) / norm);
    } else {
      for (std::size_t k = 0; k < d; ++k) dx[i * d + k] = static_cast<float>(dy[i * d + k] / kL2Eps);
    }
  }
  return dx;
}

}  // namespace taco::nn
