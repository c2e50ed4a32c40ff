#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "taco/analysis.hpp"
#include "taco/corpus.hpp"
#include "taco/model.hpp"
#include "taco/trainer.hpp"

namespace taco::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v, int precision = 4);

// Progress goes to stderr so stdout carries only the verdict lines.
void log(const std::string& message);

Outcome loss_oracle();
Outcome gradient_suite();
Outcome loss_reduction();
Outcome balanced_sampling();
Outcome synthesis_invariants();
Outcome knn_oracle();

struct DeskOptions {
  std::filesystem::path work_dir;
  std::filesystem::path configs_dir;
  bool fresh = false;
};

struct TrainedRun {
  std::string name;
  TrainConfig config;
  std::unique_ptr<TaskEncoder> encoder;
  double train_seconds = 0.0;
  bool cached = false;
  // Embeddings of the evaluation tasks, filled on first request.
  std::optional<std::vector<EmbeddingRecord>> train_records;
  std::optional<std::vector<EmbeddingRecord>> test_records;
};

// Desk corpus, split and the three training runs, built on first use.
class Desk {
 public:
  explicit Desk(DeskOptions options) : options_(std::move(options)) {}

  const Corpus& corpus();
  const Corpus& generated();
  const SplitAssignment& split();
  TrainedRun& run(const std::string& name);
  const std::filesystem::path& work_dir() const { return options_.work_dir; }

  std::vector<TaskType> training_tasks();
  // The training tasks plus one unseen task.
  std::vector<TaskType> eval_tasks();
  const std::vector<EmbeddingRecord>& records(TrainedRun& run, Split which);

 private:
  void build_corpus();
  TrainConfig run_config(const std::string& name);

  DeskOptions options_;
  std::optional<Corpus> generated_;
  std::optional<Corpus> corpus_;
  std::optional<SplitAssignment> split_;
  std::vector<std::unique_ptr<TrainedRun>> runs_;
};

Outcome desk_training(Desk& desk);
Outcome failure_effect(Desk& desk);
Outcome sweep_shapes(Desk& desk);
Outcome similarity_sanity(Desk& desk);
Outcome round_trips(Desk& desk);

}  // namespace taco::acceptance
