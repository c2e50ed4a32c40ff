#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "taco/corpus.hpp"
#include "taco/rng.hpp"

namespace taco::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto tag = std::to_string(mix_seed(reinterpret_cast<std::uintptr_t>(this)) % 1000000) + "_" +
                     std::to_string(counter++);
    path_ = std::filesystem::temp_directory_path() / ("taco_test_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline DatasetSpec small_dataset(const std::string& id, bool grayscale, int classes, int samples = 12,
                                 bool seen = true, int side = 32) {
  DatasetSpec d;
  d.dataset_id = id;
  d.height = side;
  d.width = side;
  d.num_samples = samples;
  d.grayscale = grayscale;
  d.num_classes = classes;
  d.seen = seen;
  return d;
}

// Two gray datasets, one color dataset and one unseen gray dataset.
inline CorpusSpec small_corpus_spec(std::uint64_t seed = 11, int samples = 12) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.datasets = {small_dataset("gray_a", true, 2, samples), small_dataset("gray_b", true, 1, samples),
                   small_dataset("rgb_c", false, 2, samples), small_dataset("gray_u", true, 1, samples, false)};
  return spec;
}

}  // namespace taco::testing
