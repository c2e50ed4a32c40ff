#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/losses.hpp"
#include "taco/model.hpp"
#include "taco/sampling.hpp"

namespace taco {

enum class LossMode { kTaco, kSimclrBaseline };

const char* loss_mode_name(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct TrainConfig {
  int iterations = 5000;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  double tau = 0.07;
  BatchSpec batch{20, 0};
  bool failure_tasks = false;
  int failure_start = 1000;
  BatchSpec failure_batch{15, 10};
  LossMode loss_mode = LossMode::kTaco;
  LossAggregation aggregation = LossAggregation::kMean;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0: final checkpoint only
  int eval_every = 0;        // 0: no validation loss
  // Task names to train on; empty means every seen task.
  std::vector<std::string> tasks;
  // Dataset ids to train on; empty means every seen dataset.
  std::vector<std::string> datasets;
  bool restrict_false_color = false;
  EncoderConfig model;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);

  std::vector<TaskType> task_list() const;
  std::vector<std::string> dataset_list(const Corpus& corpus) const;
  // The encoder configuration actually trained (input channels and tau
  // follow the loss mode and config).
  EncoderConfig effective_model() const;
};

struct MetricsLine {
  int iter = 0;
  double loss = 0.0;
  double lr = 0.0;
  bool failure_active = false;
  int batch_size = 0;
  int pairs = 0;
  int failure_count = 0;
  int distinct_tasks = 0;
  bool has_val_loss = false;
  double val_loss = 0.0;

  std::string to_json() const;
};

struct TrainOutputs {
  // When set: metrics.jsonl, checkpoint.bin and cadence checkpoints go here.
  std::filesystem::path out_dir;
  std::function<void(const MetricsLine&)> on_iteration;
};

struct TrainResult {
  TaskEncoder encoder;
  std::vector<MetricsLine> metrics;
  std::filesystem::path checkpoint_path;
};

// sampler -> batch (+ failure tasks) -> stack -> encode -> project -> loss ->
// backward -> sgd_step, for config.iterations steps. A NumericError is
// rethrown with the iteration number.
TrainResult train(const TrainConfig& config, const Corpus& corpus, const SplitAssignment& split,
                  const TrainOutputs& outputs = {});

// One augmented view for the self-supervised baseline: random square crop of
// 0.8 of the side, horizontal flip with p=0.5, brightness factor in [0.8, 1.2].
Image simclr_augment(const Image& image, Rng& rng);

}  // namespace taco
