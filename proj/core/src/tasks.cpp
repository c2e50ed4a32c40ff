#include "taco/tasks.hpp"

#include <cmath>

#include "taco/error.hpp"
#include "taco/morphology.hpp"
#include "taco/raster.hpp"
#include "taco/rng.hpp"
#include "taco/semantic.hpp"

namespace taco {
namespace {

using C = TaskCategory;
using T = TaskType;

constexpr std::array<TaskInfo, kNumTasks> kTasks = {{
    {T::kSegmentation, "segmentation", C::kSemantic, true},
    {T::kBoundingBoxes, "bounding_boxes", C::kSemantic, true},
    {T::kInteractiveSegmentation, "interactive_segmentation", C::kSemantic, true},
    {T::kPoints, "points", C::kSemantic, true},
    {T::kSemanticEdges, "semantic_edges", C::kSemantic, true},
    {T::kSkeletons, "skeletons", C::kSemantic, true},
    {T::kSemanticHulls, "semantic_hulls", C::kSemantic, false},
    {T::kDecreaseBrightness, "decrease_brightness", C::kTransformation, true},
    {T::kDistanceMap, "distance_map", C::kTransformation, true},
    {T::kFalseColorization, "false_colorization", C::kTransformation, true},
    {T::kGeodesic, "geodesic", C::kTransformation, true},
    {T::kGeodesicAndEuclid, "geodesic_and_euclid", C::kTransformation, true},
    {T::kHorizontalFlip, "horizontal_flip", C::kTransformation, true},
    {T::kVerticalFlip, "vertical_flip", C::kTransformation, false},
    {T::kIdentity, "identity", C::kTransformation, true},
    {T::kIncreaseContrast, "increase_contrast", C::kTransformation, true},
    {T::kRotate45, "rotate45", C::kTransformation, false},
    {T::kRotate90, "rotate90", C::kTransformation, true},
    {T::kRotate180, "rotate180", C::kTransformation, true},
    {T::kRotate270, "rotate270", C::kTransformation, true},
    {T::kZoomIn, "zoom_in", C::kTransformation, true},
    {T::kInvert, "invert", C::kTransformation, false},
    {T::kInpainting, "inpainting", C::kGenerative, true},
    {T::kInpainting3x, "inpainting_3x", C::kGenerative, true},
    {T::kImageGeneration, "image_generation", C::kGenerative, true},
    {T::kSaltPepperNoise, "salt_pepper_noise", C::kGenerative, true},
    {T::kSuperResolution, "super_resolution", C::kGenerative, true},
    {T::kColorization, "colorization", C::kGenerative, false},
    {T::kDenoising, "denoising", C::kGenerative, false},
    {T::kOutpainting, "outpainting", C::kGenerative, false},
}};

Rect random_square(int height, int width, double min_frac, double max_frac, Rng& rng) {
  const double side_base = std::min(height, width);
  const int side = std::max(1, static_cast<int>(std::lround(uniform_real(rng, min_frac, max_frac) * side_base)));
  Rect r;
  r.height = side;
  r.width = side;
  r.y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(height - side + 1)));
  r.x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(width - side + 1)));
  return r;
}

}  // namespace

const std::array<TaskInfo, kNumTasks>& task_table() { return kTasks; }

const TaskInfo& task_info(TaskType type) { return kTasks[static_cast<std::size_t>(type)]; }

std::string_view task_name(TaskType type) { return task_info(type).name; }

std::optional<TaskType> parse_task(std::string_view name) {
  for (const auto& t : kTasks) {
    if (t.name == name) return t.type;
  }
  return std::nullopt;
}

std::vector<TaskType> all_tasks() {
  std::vector<TaskType> out;
  for (const auto& t : kTasks) out.push_back(t.type);
  return out;
}

std::string VisualTaskKey::label() const {
  if (failure) return std::string(kFailureLabel);
  return std::string(task_name(task)) + "@" + dataset_id;
}

bool task_applicability(TaskType task, const DatasetMeta& meta, const ApplicabilityPolicy& policy) {
  if (task == TaskType::kColorization && meta.is_grayscale) return false;
  if (policy.restrict_false_color && task == TaskType::kFalseColorization && !meta.is_grayscale) return false;
  return true;
}

TaskInstance synthesize_task_instance(const Sample& sample, const DatasetMeta& meta, TaskType task,
                                      std::uint64_t seed, const TaskParams& p, const ApplicabilityPolicy& policy) {
  if (!task_applicability(task, meta, policy)) {
    throw ContractError(std::string(task_name(task)) + " is not applicable to dataset " + meta.dataset_id);
  }
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(task)));
  const Image& img = sample.image;
  TaskInstance t;
  t.key = VisualTaskKey{task, sample.dataset_id, false};
  t.source_sample_id = sample.sample_id;
  t.input = img;

  auto semantic = [&](SemanticKind kind) {
    RenderedPair r = semantic_render(sample, kind, rng);
    t.input = std::move(r.input);
    t.output = std::move(r.output);
  };

  switch (task) {
    case T::kSegmentation:
      if (sample.mask.foreground_count() == 0) throw SkipInstance("segmentation of an empty mask");
      semantic(SemanticKind::kSegmentation);
      break;
    case T::kBoundingBoxes:
      semantic(SemanticKind::kBoxes);
      break;
    case T::kInteractiveSegmentation:
      semantic(SemanticKind::kInteractive);
      break;
    case T::kPoints:
      semantic(SemanticKind::kPoints);
      break;
    case T::kSemanticEdges:
      semantic(SemanticKind::kEdges);
      break;
    case T::kSkeletons:
      t.output = render_skeleton(sample.mask);
      break;
    case T::kSemanticHulls:
      t.output = render_hulls(sample.mask);
      break;
    case T::kDecreaseBrightness:
      t.output = brightness(img, p.decrease_brightness);
      break;
    case T::kDistanceMap:
      t.output = render_distance_map(sample.mask);
      break;
    case T::kFalseColorization:
      t.output = false_color(img);
      break;
    case T::kGeodesic:
      t.output = render_geodesic(img, sample.mask, 1.0);
      break;
    case T::kGeodesicAndEuclid:
      t.output = render_geodesic(img, sample.mask, 0.5);
      break;
    case T::kHorizontalFlip:
      t.output = hflip(img);
      break;
    case T::kVerticalFlip:
      t.output = vflip(img);
      break;
    case T::kIdentity:
      t.output = img;
      break;
    case T::kIncreaseContrast:
      t.output = contrast(img, p.increase_contrast);
      break;
    case T::kRotate45:
      t.output = rotate(img, 45.0);
      break;
    case T::kRotate90:
      t.output = rotate(img, 90.0);
      break;
    case T::kRotate180:
      t.output = rotate(img, 180.0);
      break;
    case T::kRotate270:
      t.output = rotate(img, 270.0);
      break;
    case T::kZoomIn:
      t.output = zoom(img, p.zoom_factor);
      break;
    case T::kInvert:
      t.output = invert(img);
      break;
    case T::kInpainting:
      t.output = img;
      t.input = erase(img, {random_square(img.height(), img.width(), p.inpaint_min_side, p.inpaint_max_side, rng)});
      break;
    case T::kInpainting3x: {
      std::vector<Rect> rects;
      for (int i = 0; i < 3; ++i) {
        rects.push_back(random_square(img.height(), img.width(), p.inpaint3_min_side, p.inpaint3_max_side, rng));
      }
      t.output = img;
      t.input = erase(img, rects);
      break;
    }
    case T::kImageGeneration:
      t.output = img;
      t.input = noise_fill(img.height(), img.width(), rng);
      break;
    case T::kSaltPepperNoise:
      t.output = img;
      t.input = salt_pepper(img, p.salt_pepper_p, rng);
      break;
    case T::kSuperResolution:
      t.output = img;
      t.input = downsample(img, p.super_resolution_factor);
      break;
    case T::kColorization:
      t.output = img;
      t.input = to_grayscale(img);
      break;
    case T::kDenoising:
      t.output = img;
      t.input = gaussian_noise(img, p.denoise_sigma, rng);
      break;
    case T::kOutpainting:
      t.output = img;
      t.input = border_erase(img, p.outpaint_keep);
      break;
  }
  return t;
}

}  // namespace taco
