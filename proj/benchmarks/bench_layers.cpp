#include <benchmark/benchmark.h>

#include "taco/layers.hpp"
#include "taco/losses.hpp"
#include "taco/model.hpp"
#include "taco/morphology.hpp"
#include "taco/rng.hpp"

namespace {

taco::nn::Tensor4 random_tensor(taco::nn::Shape4 s, std::uint64_t seed) {
  taco::Rng rng(seed);
  taco::nn::Tensor4 t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(taco::uniform_real(rng, -1, 1));
  return t;
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = random_tensor({40, c, 32, 32}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(taco::nn::conv2d_forward(x, w, {}, 1, 1));
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv3x3Backward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = random_tensor({40, c, 32, 32}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto dy = random_tensor({40, c, 32, 32}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(taco::nn::conv2d_backward(x, w, false, dy, 1, 1));
}
BENCHMARK(BM_Conv3x3Backward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_EncoderTrainStep(benchmark::State& state) {
  taco::TaskEncoder enc(taco::EncoderConfig{}, 7);
  const auto x = random_tensor({40, 6, 64, 64}, 4);
  for (auto _ : state) {
    auto et = enc.make_encoder_tape();
    auto pt = enc.make_projector_tape();
    const auto f = enc.encode(x, taco::nn::Mode::kTrain, et.get());
    const auto z = enc.project(f, pt.get());
    taco::nn::Tensor4 dz(z.shape(), 0.01f);
    enc.encode_backward(*et, enc.project_backward(*pt, dz));
    enc.params().zero_grad();
  }
}
BENCHMARK(BM_EncoderTrainStep)->Unit(benchmark::kMillisecond);

void BM_DistanceTransform(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  taco::Mask m(n, n);
  taco::Rng rng(5);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) m.at(y, x) = taco::uniform01(rng) < 0.05 ? 1 : 0;
  for (auto _ : state) benchmark::DoNotOptimize(taco::euclidean_distance_to_foreground(m));
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(256);

void BM_SupContrastiveLoss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  taco::Rng rng(6);
  Eigen::MatrixXd z(n, 32);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 32; ++j) z(i, j) = taco::standard_normal(rng);
    z.row(i).normalize();
  }
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i / 2;
  for (auto _ : state) benchmark::DoNotOptimize(taco::sup_contrastive_loss(z, labels, 0.07));
}
BENCHMARK(BM_SupContrastiveLoss)->Arg(40)->Arg(256);

}  // namespace
