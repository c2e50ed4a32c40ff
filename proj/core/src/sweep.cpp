#include "taco/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "taco/analysis.hpp"
#include "taco/error.hpp"
#include "taco/raster.hpp"
#include "taco/semantic.hpp"

namespace taco {

const char* sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::kBrightness: return "brightness";
    case SweepKind::kRotation: return "rotation";
    case SweepKind::kNoisySegmentation: return "noisy_segmentation";
  }
  return "?";
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "brightness") return SweepKind::kBrightness;
  if (name == "rotation") return SweepKind::kRotation;
  if (name == "noisy_segmentation") return SweepKind::kNoisySegmentation;
  throw ConfigError("unknown sweep kind '" + name + "' (brightness, rotation, noisy_segmentation)");
}

std::vector<double> default_grid(SweepKind kind) {
  std::vector<double> g;
  switch (kind) {
    case SweepKind::kBrightness:
      for (int i = 5; i <= 20; ++i) g.push_back(i / 10.0);
      break;
    case SweepKind::kRotation:
      for (int i = 0; i <= 24; ++i) g.push_back(15.0 * i);
      break;
    case SweepKind::kNoisySegmentation:
      for (int i = 0; i <= 10; i += 2) g.push_back(i / 100.0);
      for (int i = 2; i <= 10; ++i) g.push_back(i / 10.0);
      break;
  }
  return g;
}

std::vector<TaskType> default_reference_tasks(SweepKind kind) {
  switch (kind) {
    case SweepKind::kBrightness: return {TaskType::kIdentity, TaskType::kDecreaseBrightness};
    case SweepKind::kRotation:
      return {TaskType::kIdentity, TaskType::kRotate90, TaskType::kRotate180, TaskType::kRotate270};
    case SweepKind::kNoisySegmentation: return {TaskType::kSegmentation};
  }
  return {};
}

SweepSpec SweepSpec::defaults(SweepKind kind) {
  SweepSpec s;
  s.kind = kind;
  s.grid = default_grid(kind);
  s.reference_tasks = default_reference_tasks(kind);
  return s;
}

void SweepSpec::validate() const {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
  if (probe_count < 10) throw ConfigError("sweep probe_count must be >= 10");
  if (reference_tasks.empty()) throw ConfigError("sweep needs at least one reference task");
  if (kind == SweepKind::kBrightness && grid.front() <= 0) throw ConfigError("brightness factors must be positive");
  if (kind == SweepKind::kNoisySegmentation && (grid.front() < 0 || grid.back() > 1)) {
    throw ConfigError("noise fractions must lie in [0, 1]");
  }
}

namespace {

std::vector<std::size_t> test_samples(const Corpus& corpus, const SplitAssignment& split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i)
    if (split.at(corpus.samples[i].sample_id) == Split::kTest) out.push_back(i);
  return out;
}

}  // namespace

std::vector<SweepCurve> adaptation_sweep(TaskEncoder& encoder, const Corpus& corpus, const SplitAssignment& split,
                                         const SweepSpec& spec, const TaskParams& params) {
  spec.validate();
  const std::vector<std::size_t> test = test_samples(corpus, split);
  if (test.empty()) throw DataError("sweep: the test split is empty");

  // Reference means over each task's test instances.
  std::vector<Eigen::VectorXd> ref_means;
  for (TaskType task : spec.reference_tasks) {
    std::vector<TaskInstance> instances;
    bool applicable_somewhere = false;
    for (std::size_t i : test) {
      const Sample& s = corpus.samples[i];
      const DatasetMeta& meta = corpus.meta(s.dataset_id);
      if (!task_applicability(task, meta)) continue;
      applicable_somewhere = true;
      try {
        instances.push_back(synthesize_task_instance(s, meta, task, mix_seed(spec.seed, i), params));
      } catch (const SkipInstance&) {
      }
    }
    if (!applicable_somewhere) {
      throw ContractError(std::string("sweep reference task ") + std::string(task_name(task)) +
                          " is not applicable to any test sample");
    }
    if (instances.empty()) throw DataError("sweep: no test instances for " + std::string(task_name(task)));
    const auto records = embed_instances(encoder, instances);
    ref_means.push_back(mean_task_embeddings(records, Granularity::kTask).begin()->second);
  }

  // Probe samples: a seeded shuffle of the test split.
  std::vector<std::size_t> candidates;
  for (std::size_t i : test) {
    if (spec.kind == SweepKind::kNoisySegmentation && corpus.samples[i].mask.foreground_count() == 0) continue;
    candidates.push_back(i);
  }
  Rng rng(mix_seed(spec.seed, 0x5eeeULL));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (candidates.size() > static_cast<std::size_t>(spec.probe_count)) candidates.resize(spec.probe_count);
  if (candidates.size() < 10) throw DataError("sweep: fewer than 10 usable probe samples in the test split");

  std::vector<SweepCurve> curves(spec.reference_tasks.size());
  for (std::size_t r = 0; r < curves.size(); ++r) {
    curves[r].reference = spec.reference_tasks[r];
    curves[r].grid = spec.grid;
  }
  for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
    const double g = spec.grid[gi];
    std::vector<TaskInstance> altered;
    for (std::size_t pi = 0; pi < candidates.size(); ++pi) {
      const Sample& s = corpus.samples[candidates[pi]];
      TaskInstance t;
      t.input = s.image;
      t.key = VisualTaskKey{TaskType::kIdentity, s.dataset_id, false};
      t.source_sample_id = s.sample_id;
      switch (spec.kind) {
        case SweepKind::kBrightness:
          t.output = brightness(s.image, g);
          break;
        case SweepKind::kRotation:
          t.output = rotate(s.image, g);
          break;
        case SweepKind::kNoisySegmentation: {
          t.key.task = TaskType::kSegmentation;
          Rng noise(mix_seed(mix_seed(spec.seed, candidates[pi]), gi));
          t.output = noisy_segmentation(render_segmentation(s.mask), g, Palette::standard(), noise);
          break;
        }
      }
      altered.push_back(std::move(t));
    }
    const auto records = embed_instances(encoder, altered);
    for (std::size_t r = 0; r < curves.size(); ++r) {
      const Eigen::VectorXd& mean = ref_means[r];
      std::vector<float> m(mean.data(), mean.data() + mean.size());
      std::vector<double> d;
      for (const auto& rec : records) d.push_back(cosine_distance(rec.vector, m));
      const double mu = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
      double var = 0.0;
      for (double x : d) var += (x - mu) * (x - mu);
      curves[r].mean.push_back(mu);
      curves[r].stddev.push_back(std::sqrt(var / static_cast<double>(d.size())));
    }
  }
  return curves;
}

std::string sweep_to_csv(const std::vector<SweepCurve>& curves) {
  std::ostringstream os;
  os << "grid";
  for (const auto& c : curves) os << ',' << task_name(c.reference) << "_mean," << task_name(c.reference) << "_std";
  os << '\n' << std::setprecision(9);
  if (curves.empty()) return os.str();
  for (std::size_t i = 0; i < curves.front().grid.size(); ++i) {
    os << curves.front().grid[i];
    for (const auto& c : curves) os << ',' << c.mean[i] << ',' << c.stddev[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace taco
