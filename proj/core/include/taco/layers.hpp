#pragma once

#include <vector>

#include "taco/tensor.hpp"

namespace taco::nn {

// ---- convolution -----------------------------------------------------------

// Cross-correlation. weight: (Cout, Cin, K, K); bias: (1, Cout, 1, 1) or empty.
Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias, int stride, int pad);

struct ConvGrads {
  Tensor4 dx;
  Tensor4 dweight;
  Tensor4 dbias;  // empty when the layer has no bias
};

ConvGrads conv2d_backward(const Tensor4& x, const Tensor4& weight, bool has_bias, const Tensor4& dy, int stride,
                          int pad, bool need_dx = true);

// ---- batch normalization ---------------------------------------------------

enum class Mode { kTrain, kEval };

struct RunningStats {
  std::vector<float> mean;
  std::vector<float> var;
  explicit RunningStats(int channels = 0) : mean(channels, 0.0f), var(channels, 1.0f) {}
};

struct BatchNormCache {
  Tensor4 xhat;
  std::vector<float> inv_std;
  Mode mode = Mode::kTrain;
};

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.1f;

// gamma, beta: (1, C, 1, 1). Training mode uses batch statistics and updates
// `running`; eval mode normalizes with `running`.
Tensor4 batchnorm_forward(const Tensor4& x, const Tensor4& gamma, const Tensor4& beta, RunningStats& running,
                          Mode mode, BatchNormCache* cache);

struct BatchNormGrads {
  Tensor4 dx;
  Tensor4 dgamma;
  Tensor4 dbeta;
};

BatchNormGrads batchnorm_backward(const Tensor4& dy, const BatchNormCache& cache, const Tensor4& gamma);

// ---- elementwise / pooling -------------------------------------------------

Tensor4 relu_forward(const Tensor4& x);
// Gradient passes where the forward input was strictly positive.
Tensor4 relu_backward(const Tensor4& x, const Tensor4& dy);

struct MaxPoolCache {
  Shape4 input_shape;
  std::vector<std::size_t> argmax;
};

// 2x2 window, stride 2. Ties route to the first maximum in scan order.
Tensor4 maxpool2_forward(const Tensor4& x, MaxPoolCache* cache);
Tensor4 maxpool2_backward(const Tensor4& dy, const MaxPoolCache& cache);

// (N, C, H, W) -> (N, C, 1, 1)
Tensor4 global_avg_pool_forward(const Tensor4& x);
Tensor4 global_avg_pool_backward(const Tensor4& dy, const Shape4& input_shape);

Tensor4 residual_add(const Tensor4& a, const Tensor4& b);

// ---- dense -----------------------------------------------------------------

// x: (N, In, 1, 1) or any (N, ...) flattened per item; weight: (Out, In, 1, 1);
// bias: (1, Out, 1, 1). Returns (N, Out, 1, 1).
Tensor4 linear_forward(const Tensor4& x, const Tensor4& weight, const Tensor4& bias);

struct LinearGrads {
  Tensor4 dx;
  Tensor4 dweight;
  Tensor4 dbias;
};

LinearGrads linear_backward(const Tensor4& x, const Tensor4& weight, const Tensor4& dy);

// Row-wise x / max(||x||, eps); zero rows stay zero.
inline constexpr float kL2Eps = 1e-12f;
Tensor4 l2_normalize_forward(const Tensor4& x);
Tensor4 l2_normalize_backward(const Tensor4& x, const Tensor4& y, const Tensor4& dy);

}  // namespace taco::nn
