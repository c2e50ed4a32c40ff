#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/rng.hpp"
#include "taco/tasks.hpp"

namespace taco {

// Visual tasks available for sampling, each with the corpus samples that can
// host it. Built from one split of a corpus; the corpus must outlive the index.
class CorpusIndex {
 public:
  struct Options {
    std::vector<TaskType> tasks;            // empty: every task
    std::vector<std::string> dataset_ids;   // empty: every dataset
    ApplicabilityPolicy policy;
  };

  static CorpusIndex build(const Corpus& corpus, const SplitAssignment& split, Split which, const Options& options);

  const Corpus& corpus() const { return *corpus_; }
  const std::vector<VisualTaskKey>& keys() const { return keys_; }
  // Indices into corpus().samples, per key.
  const std::vector<std::vector<std::size_t>>& members() const { return members_; }
  std::size_t task_size(std::size_t task) const { return members_[task].size(); }
  std::size_t num_tasks() const { return keys_.size(); }
  const ApplicabilityPolicy& policy() const { return policy_; }

  // Adds a task by hand; used by tests and custom corpora.
  void add(const VisualTaskKey& key, std::vector<std::size_t> sample_indices);
  explicit CorpusIndex(const Corpus& corpus) : corpus_(&corpus) {}

 private:
  const Corpus* corpus_;
  std::vector<VisualTaskKey> keys_;
  std::vector<std::vector<std::size_t>> members_;
  ApplicabilityPolicy policy_;
};

struct InstanceRef {
  std::size_t task = 0;    // index into CorpusIndex::keys()
  std::size_t member = 0;  // index into CorpusIndex::members()[task]
};

// Multinomial over every (task, instance) with weight 1/|T_i|, so each task
// is drawn with equal probability regardless of its size.
class BalancedSampler {
 public:
  explicit BalancedSampler(const CorpusIndex& index);

  InstanceRef draw(Rng& rng) const;
  // Uniform over the other members of the same task.
  std::size_t draw_partner(std::size_t task, std::size_t member, Rng& rng) const;
  const CorpusIndex& index() const { return *index_; }

 private:
  const CorpusIndex* index_;
  std::vector<double> cumulative_;
  std::vector<InstanceRef> refs_;
};

struct BatchSpec {
  int base_pairs = 20;
  int failure_count = 0;

  int total() const { return 2 * base_pairs + failure_count; }
  void validate() const;
  static BatchSpec with_failures() { return {15, 10}; }
};

struct SynthOptions {
  TaskParams params;
  int max_retries = 100;
};

struct Batch {
  // Pairs occupy slots (2p, 2p+1); failure instances follow.
  std::vector<TaskInstance> instances;
  int base_pairs = 0;
  int failure_count = 0;

  // Integer class per instance: one per distinct visual task, plus one shared
  // class for every failure instance.
  std::vector<int> class_labels() const;
};

// base_pairs task-augmented pairs; SkipInstance triggers a redraw.
Batch draw_batch(const BalancedSampler& sampler, const BatchSpec& spec, Rng& rng, const SynthOptions& options = {});

// Appends `count` mismatched (in_j, out_l) instances built from pairs already
// in the batch.
void inject_failure_tasks(Batch& batch, int count, Rng& rng);

// Single balanced draws without partners.
std::vector<TaskInstance> draw_instances(const BalancedSampler& sampler, int count, Rng& rng,
                                         const SynthOptions& options = {});

// Every applicable (sample, task) instance of one split, in sample order then
// task order. Samples that cannot host a task are skipped. max_per_dataset < 0
// means no cap.
std::vector<TaskInstance> enumerate_instances(const Corpus& corpus, const SplitAssignment& split, Split which,
                                              const std::vector<TaskType>& tasks, std::uint64_t seed,
                                              int max_per_dataset = -1, const TaskParams& params = {},
                                              const ApplicabilityPolicy& policy = {});

}  // namespace taco
