#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "taco/image.hpp"

namespace taco {

struct Sample {
  Image image;
  Mask mask;
  std::string dataset_id;
  std::string sample_id;

  bool operator==(const Sample&) const = default;
};

struct DatasetMeta {
  std::string dataset_id;
  bool is_grayscale = true;
  int num_classes = 1;
  bool seen = true;
  std::string modality_tag;

  bool operator==(const DatasetMeta&) const = default;
};

struct Corpus {
  std::vector<Sample> samples;
  std::vector<DatasetMeta> datasets;

  const DatasetMeta& meta(const std::string& dataset_id) const;
};

// Generation parameters for one synthetic dataset ("modality").
struct DatasetSpec {
  std::string dataset_id;
  int height = 64;
  int width = 64;
  int num_samples = 100;
  bool grayscale = true;
  int num_classes = 2;
  bool seen = true;
  int min_blobs = 1;
  int max_blobs = 3;
  // Blob radii as fractions of the shorter image side.
  double min_radius = 0.08;
  double max_radius = 0.22;
  double texture_amplitude = 0.15;
  std::string modality_tag;
};

struct CorpusSpec {
  std::vector<DatasetSpec> datasets;
  std::uint64_t seed = 0;

  void validate() const;
};

CorpusSpec load_corpus_spec(const std::filesystem::path& path);
CorpusSpec corpus_spec_from_json(const std::string& text);

Corpus generate_synthetic_corpus(const CorpusSpec& spec);

// Layout: <root>/<dataset_id>/{meta.json, images/<id>.png, masks/<id>.png}
void write_corpus(const Corpus& corpus, const std::filesystem::path& root);
Corpus ingest_corpus(const std::filesystem::path& root);

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split split);
Split parse_split(const std::string& name);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

class SplitAssignment {
 public:
  void assign(const std::string& sample_id, Split split) { map_[sample_id] = split; }
  Split at(const std::string& sample_id) const;
  bool contains(const std::string& sample_id) const { return map_.count(sample_id) != 0; }
  std::size_t size() const { return map_.size(); }
  std::size_t count(Split split) const;
  const std::map<std::string, Split>& entries() const { return map_; }

  std::string to_json() const;
  static SplitAssignment from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SplitAssignment load(const std::filesystem::path& path);

  bool operator==(const SplitAssignment&) const = default;

 private:
  std::map<std::string, Split> map_;
};

// Stratified per dataset; rounding remainders go to train.
SplitAssignment split_corpus(const std::vector<Sample>& samples, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace taco
