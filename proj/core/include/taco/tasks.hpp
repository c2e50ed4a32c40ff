#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/image.hpp"

namespace taco {

enum class TaskCategory { kSemantic, kTransformation, kGenerative };

enum class TaskType : int {
  // semantic
  kSegmentation,
  kBoundingBoxes,
  kInteractiveSegmentation,
  kPoints,
  kSemanticEdges,
  kSkeletons,
  kSemanticHulls,
  // image transformation
  kDecreaseBrightness,
  kDistanceMap,
  kFalseColorization,
  kGeodesic,
  kGeodesicAndEuclid,
  kHorizontalFlip,
  kVerticalFlip,
  kIdentity,
  kIncreaseContrast,
  kRotate45,
  kRotate90,
  kRotate180,
  kRotate270,
  kZoomIn,
  kInvert,
  // image generative
  kInpainting,
  kInpainting3x,
  kImageGeneration,
  kSaltPepperNoise,
  kSuperResolution,
  kColorization,
  kDenoising,
  kOutpainting,
};

inline constexpr int kNumTasks = 30;

struct TaskInfo {
  TaskType type;
  std::string_view name;
  TaskCategory category;
  bool seen;
};

const std::array<TaskInfo, kNumTasks>& task_table();
const TaskInfo& task_info(TaskType type);
std::string_view task_name(TaskType type);
std::optional<TaskType> parse_task(std::string_view name);
std::vector<TaskType> all_tasks();

// A (task, dataset) pair. Failure instances all share one label regardless of
// the task they were mixed from.
struct VisualTaskKey {
  TaskType task = TaskType::kIdentity;
  std::string dataset_id;
  bool failure = false;

  std::string label() const;
  bool operator==(const VisualTaskKey& other) const { return label() == other.label(); }
  bool operator<(const VisualTaskKey& other) const { return label() < other.label(); }
};

inline constexpr std::string_view kFailureLabel = "failure";

struct TaskInstance {
  Image input;
  Image output;
  VisualTaskKey key;
  bool is_failure = false;
  std::string source_sample_id;
};

// Fixed per-task parameters; all overridable from configuration.
struct TaskParams {
  double decrease_brightness = 0.5;
  double increase_contrast = 1.5;
  double zoom_factor = 2.0;
  double inpaint_min_side = 0.25;
  double inpaint_max_side = 0.40;
  double inpaint3_min_side = 0.10;
  double inpaint3_max_side = 0.15;
  double denoise_sigma = 0.1;
  double salt_pepper_p = 0.1;
  int super_resolution_factor = 4;
  double outpaint_keep = 0.5;
};

// Which (task, dataset) combinations exist. By default only colorization on
// grayscale data is excluded; restrict_false_color additionally limits
// false_colorization to grayscale datasets.
struct ApplicabilityPolicy {
  bool restrict_false_color = false;
};

bool task_applicability(TaskType task, const DatasetMeta& meta, const ApplicabilityPolicy& policy = {});

// Builds (in, out) for `task` from `sample`. Deterministic in (sample, task,
// params, seed). Throws ContractError for inapplicable tasks and SkipInstance
// when the sample cannot support the task.
TaskInstance synthesize_task_instance(const Sample& sample, const DatasetMeta& meta, TaskType task,
                                      std::uint64_t seed, const TaskParams& params = {},
                                      const ApplicabilityPolicy& policy = {});

}  // namespace taco
