#include <benchmark/benchmark.h>

#include "taco/analysis.hpp"
#include "taco/rng.hpp"

namespace {

std::vector<taco::EmbeddingRecord> random_records(int n, int dim, std::uint64_t seed, const std::string& prefix) {
  taco::Rng rng(seed);
  std::vector<taco::EmbeddingRecord> out(n);
  for (int i = 0; i < n; ++i) {
    auto& r = out[i];
    r.sample_id = prefix + std::to_string(i);
    r.key.task = static_cast<taco::TaskType>(i % taco::kNumTasks);
    r.key.dataset_id = "d" + std::to_string(i % 5);
    r.vector.resize(dim);
    for (auto& v : r.vector) v = static_cast<float>(taco::standard_normal(rng));
  }
  return out;
}

void BM_KnnClassifyAll(benchmark::State& state) {
  const auto ref = random_records(static_cast<int>(state.range(0)), 128, 1, "r");
  const auto q = random_records(500, 128, 2, "q");
  for (auto _ : state) benchmark::DoNotOptimize(taco::knn_classify_all(q, ref, 5, taco::Granularity::kVisualTask));
}
BENCHMARK(BM_KnnClassifyAll)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
