#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taco/model.hpp"
#include "taco/sampling.hpp"

namespace taco {

enum class Granularity { kVisualTask, kTask, kDataset };
enum class Filter { kSeen, kUnseen, kAll };

const char* granularity_name(Granularity g);
Granularity parse_granularity(const std::string& name);
const char* filter_name(Filter f);
Filter parse_filter(const std::string& name);

// Every applicable instance of one split embedded and annotated. Encoders with
// 3 input channels use the concatenated baseline embedding.
std::vector<EmbeddingRecord> embed_split(TaskEncoder& encoder, const Corpus& corpus, const SplitAssignment& split,
                                         Split which, const std::vector<TaskType>& tasks, std::uint64_t seed,
                                         int max_per_dataset = -1);
int embedding_dim(const TaskEncoder& encoder);

// Class label of a record at the requested granularity. Failure records are
// always labeled "failure".
std::string record_label(const EmbeddingRecord& r, Granularity g);

// 1 - <u, v> / (|u| |v|); throws NumericError on a zero-norm vector.
double cosine_distance(std::span<const float> u, std::span<const float> v);

// k nearest references by cosine distance (ties in distance keep reference
// order); majority label, ties broken by smaller summed distance, then by the
// lexicographically smaller label. Throws ContractError if the query itself
// (same sample id and visual task) is in the reference set.
std::string knn_classify(const EmbeddingRecord& query, std::span<const EmbeddingRecord> reference, int k,
                         Granularity granularity);

// Same as knn_classify for every query, sharing the reference norms.
std::vector<std::string> knn_classify_all(std::span<const EmbeddingRecord> queries,
                                          std::span<const EmbeddingRecord> reference, int k, Granularity granularity);

// Unweighted mean of per-class F1 over the classes present in `truths`.
double macro_f1(const std::vector<std::string>& predictions, const std::vector<std::string>& truths);

struct Scenario {
  Filter tasks = Filter::kAll;
  Filter datasets = Filter::kAll;

  bool admits(const EmbeddingRecord& r) const;
  std::string name() const;
};

// The nine task x dataset cells.
std::vector<Scenario> all_scenarios();

struct ReportCell {
  Scenario scenario;
  int k = 1;
  Granularity granularity = Granularity::kVisualTask;
  std::optional<double> f1;  // absent when the filtered query or reference set is empty
  int queries = 0;
};

struct Report {
  std::string name;  // "taco" or a baseline name
  std::vector<ReportCell> cells;

  const ReportCell* find(const Scenario& s, int k, Granularity g) const;
  std::string to_json() const;
  // Rows: scenarios; columns: granularity x k.
  std::string to_text() const;
};

Report eval_scenarios(std::span<const EmbeddingRecord> queries, std::span<const EmbeddingRecord> reference,
                      const std::vector<Scenario>& scenarios, const std::vector<int>& ks,
                      const std::vector<Granularity>& granularities, const std::string& name = "taco");

// Arithmetic mean of the raw vectors per label.
std::map<std::string, Eigen::VectorXd> mean_task_embeddings(std::span<const EmbeddingRecord> records,
                                                            Granularity granularity = Granularity::kTask);

struct SimilarityMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd raw;
  // Per row (x - min) / (max - min) over off-diagonal entries; diagonal 1.
  Eigen::MatrixXd normalized;

  std::string to_csv(bool use_normalized) const;
};

// Labels follow `order`; every label must have a mean.
SimilarityMatrix similarity_matrix(const std::map<std::string, Eigen::VectorXd>& means,
                                   const std::vector<std::string>& order);
SimilarityMatrix similarity_matrix(const std::map<std::string, Eigen::VectorXd>& means);

}  // namespace taco
