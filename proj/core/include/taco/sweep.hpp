#pragma once

#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/model.hpp"

namespace taco {

enum class SweepKind { kBrightness, kRotation, kNoisySegmentation };

const char* sweep_kind_name(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& name);

// brightness 0.5..2.0 step 0.1; rotation 0..360 step 15;
// noisy segmentation 0..0.10 step 0.02 then 0.2..1.0 step 0.1
std::vector<double> default_grid(SweepKind kind);
std::vector<TaskType> default_reference_tasks(SweepKind kind);

struct SweepSpec {
  SweepKind kind = SweepKind::kBrightness;
  std::vector<double> grid;
  std::vector<TaskType> reference_tasks;
  int probe_count = 50;
  std::uint64_t seed = 0;

  static SweepSpec defaults(SweepKind kind);
  void validate() const;
};

struct SweepCurve {
  TaskType reference = TaskType::kIdentity;
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> stddev;
};

// For each grid value the probe samples (test split) are altered and embedded;
// the cosine distance of each to the reference task's mean test embedding is
// summarized by mean and standard deviation over probes.
std::vector<SweepCurve> adaptation_sweep(TaskEncoder& encoder, const Corpus& corpus, const SplitAssignment& split,
                                         const SweepSpec& spec, const TaskParams& params = {});

// One row per grid value: grid, then <task>_mean,<task>_std per curve.
std::string sweep_to_csv(const std::vector<SweepCurve>& curves);

}  // namespace taco
