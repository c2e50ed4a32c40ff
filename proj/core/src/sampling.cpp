#include "taco/sampling.hpp"

#include <algorithm>
#include <set>

#include "taco/error.hpp"

namespace taco {

CorpusIndex CorpusIndex::build(const Corpus& corpus, const SplitAssignment& split, Split which,
                               const Options& options) {
  CorpusIndex index(corpus);
  index.policy_ = options.policy;
  const std::vector<TaskType> tasks = options.tasks.empty() ? all_tasks() : options.tasks;
  std::vector<const DatasetMeta*> datasets;
  if (options.dataset_ids.empty()) {
    for (const auto& m : corpus.datasets) datasets.push_back(&m);
  } else {
    for (const auto& id : options.dataset_ids) datasets.push_back(&corpus.meta(id));
  }
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const Sample& s = corpus.samples[i];
    if (split.at(s.sample_id) == which) by_dataset[s.dataset_id].push_back(i);
  }
  for (const DatasetMeta* meta : datasets) {
    const auto it = by_dataset.find(meta->dataset_id);
    if (it == by_dataset.end()) continue;
    for (TaskType t : tasks) {
      if (!task_applicability(t, *meta, options.policy)) continue;
      index.add(VisualTaskKey{t, meta->dataset_id, false}, it->second);
    }
  }
  return index;
}

void CorpusIndex::add(const VisualTaskKey& key, std::vector<std::size_t> sample_indices) {
  if (sample_indices.size() < 2) {
    throw SamplingError("visual task " + key.label() + " has " + std::to_string(sample_indices.size()) +
                        " instance(s); at least 2 are required");
  }
  for (std::size_t i : sample_indices) {
    if (i >= corpus_->samples.size()) throw ContractError("sample index out of range for " + key.label());
  }
  keys_.push_back(key);
  members_.push_back(std::move(sample_indices));
}

BalancedSampler::BalancedSampler(const CorpusIndex& index) : index_(&index) {
  if (index.num_tasks() == 0) throw SamplingError("cannot sample from an empty corpus index");
  double acc = 0.0;
  for (std::size_t t = 0; t < index.num_tasks(); ++t) {
    const double w = 1.0 / static_cast<double>(index.task_size(t));
    for (std::size_t m = 0; m < index.task_size(t); ++m) {
      acc += w;
      cumulative_.push_back(acc);
      refs_.push_back({t, m});
    }
  }
}

InstanceRef BalancedSampler::draw(Rng& rng) const {
  const double u = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return refs_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::size_t BalancedSampler::draw_partner(std::size_t task, std::size_t member, Rng& rng) const {
  const std::size_t n = index_->task_size(task);
  std::size_t k = uniform_index(rng, n - 1);
  if (k >= member) ++k;
  return k;
}

void BatchSpec::validate() const {
  if (base_pairs < 1) throw ConfigError("batch base_pairs must be >= 1");
  if (failure_count < 0) throw ConfigError("batch failure_count must be >= 0");
}

std::vector<int> Batch::class_labels() const {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(instances.size());
  for (const auto& t : instances) {
    const auto [it, inserted] = ids.emplace(t.key.label(), static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

namespace {

TaskInstance synth(const CorpusIndex& index, std::size_t task, std::size_t member, std::uint64_t seed,
                   const SynthOptions& options) {
  const Corpus& corpus = index.corpus();
  const Sample& sample = corpus.samples[index.members()[task][member]];
  return synthesize_task_instance(sample, corpus.meta(sample.dataset_id), index.keys()[task].task, seed,
                                  options.params, index.policy());
}

}  // namespace

Batch draw_batch(const BalancedSampler& sampler, const BatchSpec& spec, Rng& rng, const SynthOptions& options) {
  spec.validate();
  Batch batch;
  batch.base_pairs = spec.base_pairs;
  batch.instances.reserve(static_cast<std::size_t>(spec.total()));
  const CorpusIndex& index = sampler.index();
  for (int p = 0; p < spec.base_pairs; ++p) {
    int attempts = 0;
    while (true) {
      const InstanceRef a = sampler.draw(rng);
      const std::size_t b = sampler.draw_partner(a.task, a.member, rng);
      const std::uint64_t seed_a = rng();
      const std::uint64_t seed_b = rng();
      try {
        TaskInstance first = synth(index, a.task, a.member, seed_a, options);
        TaskInstance second = synth(index, a.task, b, seed_b, options);
        batch.instances.push_back(std::move(first));
        batch.instances.push_back(std::move(second));
        break;
      } catch (const SkipInstance&) {
        if (++attempts > options.max_retries) {
          throw SamplingError("draw_batch: exceeded " + std::to_string(options.max_retries) +
                              " redraws while building pair " + std::to_string(p));
        }
      }
    }
  }
  if (spec.failure_count > 0) inject_failure_tasks(batch, spec.failure_count, rng);
  return batch;
}

void inject_failure_tasks(Batch& batch, int count, Rng& rng) {
  if (count <= 0) return;
  std::vector<std::size_t> eligible;
  for (int p = 0; p < batch.base_pairs; ++p) {
    const auto& a = batch.instances[2 * p];
    const auto& b = batch.instances[2 * p + 1];
    if (a.source_sample_id != b.source_sample_id) eligible.push_back(static_cast<std::size_t>(p));
  }
  if (eligible.empty()) throw SamplingError("inject_failure_tasks: no pair of distinct samples in the batch");
  for (int f = 0; f < count; ++f) {
    const std::size_t p = eligible[uniform_index(rng, eligible.size())];
    const bool swap = uniform01(rng) < 0.5;
    const TaskInstance& j = batch.instances[2 * p + (swap ? 1 : 0)];
    const TaskInstance& l = batch.instances[2 * p + (swap ? 0 : 1)];
    TaskInstance t;
    t.input = j.input;
    t.output = l.output;
    t.key = VisualTaskKey{j.key.task, j.key.dataset_id, true};
    t.is_failure = true;
    t.source_sample_id = j.source_sample_id;
    batch.instances.push_back(std::move(t));
  }
  batch.failure_count += count;
}

std::vector<TaskInstance> draw_instances(const BalancedSampler& sampler, int count, Rng& rng,
                                         const SynthOptions& options) {
  std::vector<TaskInstance> out;
  for (int i = 0; i < count; ++i) {
    int attempts = 0;
    while (true) {
      const InstanceRef a = sampler.draw(rng);
      const std::uint64_t seed = rng();
      try {
        out.push_back(synth(sampler.index(), a.task, a.member, seed, options));
        break;
      } catch (const SkipInstance&) {
        if (++attempts > options.max_retries) {
          throw SamplingError("draw_instances: exceeded " + std::to_string(options.max_retries) + " redraws");
        }
      }
    }
  }
  return out;
}

std::vector<TaskInstance> enumerate_instances(const Corpus& corpus, const SplitAssignment& split, Split which,
                                              const std::vector<TaskType>& tasks, std::uint64_t seed,
                                              int max_per_dataset, const TaskParams& params,
                                              const ApplicabilityPolicy& policy) {
  std::vector<TaskInstance> out;
  std::map<std::string, int> taken;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const Sample& s = corpus.samples[i];
    if (split.at(s.sample_id) != which) continue;
    if (max_per_dataset >= 0 && taken[s.dataset_id]++ >= max_per_dataset) continue;
    const DatasetMeta& meta = corpus.meta(s.dataset_id);
    for (TaskType t : tasks) {
      if (!task_applicability(t, meta, policy)) continue;
      try {
        out.push_back(synthesize_task_instance(s, meta, t, mix_seed(seed, i), params, policy));
      } catch (const SkipInstance&) {
      }
    }
  }
  return out;
}

}  // namespace taco
