#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "taco/corpus.hpp"
#include "taco/layers.hpp"
#include "taco/optim.hpp"
#include "taco/tasks.hpp"

namespace taco {

struct EncoderConfig {
  int input_side = 64;
  int in_channels = 6;
  std::vector<int> widths = {16, 32, 64};
  int blocks_per_stage = 2;
  int feature_dim = 128;
  int projector_hidden = 0;  // 0 means feature_dim
  int projector_out = 32;
  double tau = 0.07;
  bool normalize_projector = true;

  int hidden_width() const { return projector_hidden > 0 ? projector_hidden : feature_dim; }
  void validate() const;
  std::string to_json() const;
  static EncoderConfig from_json(const std::string& text);
  // FNV-1a over the canonical JSON form.
  std::uint64_t digest() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct EmbeddingRecord {
  std::vector<float> vector;
  VisualTaskKey key;
  std::string sample_id;
  Split split = Split::kTest;
  bool seen_task = true;
  bool seen_dataset = true;
  bool is_failure = false;

  bool operator==(const EmbeddingRecord& o) const {
    return vector == o.vector && key.task == o.key.task && key.dataset_id == o.key.dataset_id &&
           key.failure == o.key.failure && sample_id == o.sample_id && split == o.split &&
           seen_task == o.seen_task && seen_dataset == o.seen_dataset && is_failure == o.is_failure;
  }
};

// Intermediate activations recorded by a training-mode forward pass.
struct EncoderTape;
struct ProjectorTape;
struct TapeDeleter {
  void operator()(EncoderTape* t) const;
  void operator()(ProjectorTape* t) const;
};
using EncoderTapePtr = std::unique_ptr<EncoderTape, TapeDeleter>;
using ProjectorTapePtr = std::unique_ptr<ProjectorTape, TapeDeleter>;

// Pre-activation residual encoder theta(.) plus the projection head phi(.).
//   stem: conv3x3/2 -> BN -> ReLU -> maxpool2
//   stages: blocks_per_stage pre-activation blocks per width; stages after the
//           first downsample by 2 with a 1x1 projection shortcut
//   head: BN -> ReLU -> conv1x1 to feature_dim -> BN -> ReLU -> global avg pool
//   projector: linear -> ReLU -> linear [-> L2 normalize]
class TaskEncoder {
 public:
  TaskEncoder(const EncoderConfig& config, std::uint64_t seed);
  ~TaskEncoder();
  TaskEncoder(TaskEncoder&&) noexcept;
  TaskEncoder& operator=(TaskEncoder&&) noexcept;

  const EncoderConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  std::map<std::string, nn::RunningStats>& running_stats() { return running_; }
  const std::map<std::string, nn::RunningStats>& running_stats() const { return running_; }

  // batch: (N, in_channels, S, S) -> (N, feature_dim, 1, 1). A non-null tape
  // records activations for encode_backward.
  nn::Tensor4 encode(const nn::Tensor4& batch, nn::Mode mode, EncoderTape* tape = nullptr);
  // features -> z (N, projector_out, 1, 1)
  nn::Tensor4 project(const nn::Tensor4& features, ProjectorTape* tape = nullptr) const;

  // Accumulate parameter gradients; return gradient w.r.t. the input.
  nn::Tensor4 project_backward(const ProjectorTape& tape, const nn::Tensor4& dz);
  void encode_backward(const EncoderTape& tape, const nn::Tensor4& dfeatures);

  EncoderTapePtr make_encoder_tape() const;
  ProjectorTapePtr make_projector_tape() const;

 private:
  EncoderConfig config_;
  nn::ParamSet params_;
  std::map<std::string, nn::RunningStats> running_;
};

// (1, 6, S, S): bilinear resize of in and out to S x S, in first.
nn::Tensor4 stack_instance(const TaskInstance& t, int side);
nn::Tensor4 stack_instances(std::span<const TaskInstance> instances, int side);
// (N, 3, S, S) from plain images.
nn::Tensor4 stack_images(std::span<const Image> images, int side);

// Eval-mode backbone embeddings (projector omitted), in batches.
std::vector<EmbeddingRecord> embed_instances(TaskEncoder& encoder, std::span<const TaskInstance> instances,
                                             int batch_size = 64);

// Baseline embedding for a 3-channel encoder: concat(theta(in), theta(out)).
std::vector<EmbeddingRecord> embed_instances_concat(TaskEncoder& encoder, std::span<const TaskInstance> instances,
                                                    int batch_size = 64);

// Fills split and seen_dataset from the corpus and split assignment.
void annotate_records(std::vector<EmbeddingRecord>& records, const Corpus& corpus, const SplitAssignment& split);

// Binary checkpoint; layout documented in docs/checkpoint_format.md.
void save_checkpoint(const std::string& path, const TaskEncoder& encoder);
TaskEncoder load_checkpoint(const std::string& path);
// Throws VersionError when the stored configuration differs from `expected`.
TaskEncoder load_checkpoint(const std::string& path, const EncoderConfig& expected);

}  // namespace taco
