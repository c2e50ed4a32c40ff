#include "taco/analysis.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taco/error.hpp"

namespace taco {

using nlohmann::json;

const char* granularity_name(Granularity g) {
  switch (g) {
    case Granularity::kVisualTask: return "visual_task";
    case Granularity::kTask: return "task";
    case Granularity::kDataset: return "dataset";
  }
  return "?";
}

Granularity parse_granularity(const std::string& name) {
  if (name == "visual_task") return Granularity::kVisualTask;
  if (name == "task") return Granularity::kTask;
  if (name == "dataset") return Granularity::kDataset;
  throw ConfigError("unknown granularity '" + name + "' (visual_task, task, dataset)");
}

const char* filter_name(Filter f) {
  switch (f) {
    case Filter::kSeen: return "seen";
    case Filter::kUnseen: return "unseen";
    case Filter::kAll: return "all";
  }
  return "?";
}

Filter parse_filter(const std::string& name) {
  if (name == "seen") return Filter::kSeen;
  if (name == "unseen") return Filter::kUnseen;
  if (name == "all") return Filter::kAll;
  throw ConfigError("unknown filter '" + name + "' (seen, unseen, all)");
}

std::vector<EmbeddingRecord> embed_split(TaskEncoder& encoder, const Corpus& corpus, const SplitAssignment& split,
                                         Split which, const std::vector<TaskType>& tasks, std::uint64_t seed,
                                         int max_per_dataset) {
  const auto instances = enumerate_instances(corpus, split, which, tasks, seed, max_per_dataset);
  auto records = encoder.config().in_channels == 3 ? embed_instances_concat(encoder, instances)
                                                   : embed_instances(encoder, instances);
  annotate_records(records, corpus, split);
  return records;
}

int embedding_dim(const TaskEncoder& encoder) {
  return encoder.config().feature_dim * (encoder.config().in_channels == 3 ? 2 : 1);
}

std::string record_label(const EmbeddingRecord& r, Granularity g) {
  if (r.is_failure || r.key.failure) return std::string(kFailureLabel);
  switch (g) {
    case Granularity::kVisualTask: return r.key.label();
    case Granularity::kTask: return std::string(task_name(r.key.task));
    case Granularity::kDataset: return r.key.dataset_id;
  }
  return {};
}

double cosine_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw ShapeError("cosine_distance: length mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw NumericError("cosine_distance: zero-norm vector");
  return 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
}

namespace {

std::string identity_of(const EmbeddingRecord& r) {
  return r.sample_id + "|" + r.key.label() + "|" + std::string(task_name(r.key.task));
}

// Rows are unit-normalized copies of the record vectors.
Eigen::MatrixXd unit_rows(std::span<const EmbeddingRecord> records) {
  if (records.empty()) return {};
  const std::size_t dim = records.front().vector.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& v = records[i].vector;
    if (v.size() != dim) throw ShapeError("embedding records have differing dimensions");
    double nn = 0.0;
    for (float x : v) nn += static_cast<double>(x) * x;
    if (nn == 0.0) throw NumericError("zero-norm embedding for sample " + records[i].sample_id);
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j] * inv;
  }
  return m;
}

struct Neighbor {
  double distance;
  std::size_t index;
};

// Up to kmax nearest references per query, ordered by (distance, index).
std::vector<std::vector<Neighbor>> nearest(std::span<const EmbeddingRecord> queries,
                                           std::span<const EmbeddingRecord> reference, int kmax) {
  std::set<std::string> ref_ids;
  for (const auto& r : reference) ref_ids.insert(identity_of(r));
  for (const auto& q : queries) {
    if (ref_ids.count(identity_of(q))) {
      throw ContractError("kNN query " + q.sample_id + " (" + q.key.label() + ") is also in the reference set");
    }
  }
  std::vector<std::vector<Neighbor>> out(queries.size());
  if (queries.empty()) return out;
  const Eigen::MatrixXd q = unit_rows(queries);
  const Eigen::MatrixXd r = unit_rows(reference);
  if (q.cols() != r.cols()) throw ShapeError("query and reference dimensions differ");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(kmax), reference.size());
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < q.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, q.rows() - start);
    const Eigen::MatrixXd sims = q.middleRows(start, rows) * r.transpose();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) {
      std::vector<Neighbor> all(reference.size());
      for (std::size_t j = 0; j < reference.size(); ++j) all[j] = {1.0 - sims(i, static_cast<Eigen::Index>(j)), j};
      auto less = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
      };
      std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
      all.resize(k);
      out[static_cast<std::size_t>(start + i)] = std::move(all);
    }
  }
  return out;
}

std::string vote(const std::vector<Neighbor>& neighbors, std::span<const EmbeddingRecord> reference, int k,
                 Granularity g) {
  std::map<std::string, std::pair<int, double>> tally;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), neighbors.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = tally[record_label(reference[neighbors[i].index], g)];
    ++t.first;
    t.second += neighbors[i].distance;
  }
  const std::pair<const std::string, std::pair<int, double>>* best = nullptr;
  for (const auto& entry : tally) {
    if (!best || entry.second.first > best->second.first ||
        (entry.second.first == best->second.first && entry.second.second < best->second.second)) {
      best = &entry;
    }
  }
  return best->first;
}

}  // namespace

std::vector<std::string> knn_classify_all(std::span<const EmbeddingRecord> queries,
                                          std::span<const EmbeddingRecord> reference, int k, Granularity granularity) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (reference.empty()) throw ContractError("kNN reference set is empty");
  const auto neighbors = nearest(queries, reference, k);
  std::vector<std::string> out;
  out.reserve(queries.size());
  for (const auto& n : neighbors) out.push_back(vote(n, reference, k, granularity));
  return out;
}

std::string knn_classify(const EmbeddingRecord& query, std::span<const EmbeddingRecord> reference, int k,
                         Granularity granularity) {
  return knn_classify_all(std::span<const EmbeddingRecord>(&query, 1), reference, k, granularity).front();
}

double macro_f1(const std::vector<std::string>& predictions, const std::vector<std::string>& truths) {
  if (predictions.size() != truths.size()) throw ContractError("macro_f1: predictions and truths differ in length");
  if (truths.empty()) throw ContractError("macro_f1: empty input");
  std::map<std::string, std::array<long, 3>> counts;  // tp, fp, fn
  for (const auto& t : truths) counts[t];
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predictions[i] == truths[i]) {
      ++counts[truths[i]][0];
    } else {
      ++counts[truths[i]][2];
      auto it = counts.find(predictions[i]);
      if (it != counts.end()) ++it->second[1];
    }
  }
  double sum = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = c[0] + c[1] > 0 ? static_cast<double>(c[0]) / (c[0] + c[1]) : 0.0;
    const double r = c[0] + c[2] > 0 ? static_cast<double>(c[0]) / (c[0] + c[2]) : 0.0;
    sum += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / static_cast<double>(counts.size());
}

bool Scenario::admits(const EmbeddingRecord& r) const {
  auto ok = [](Filter f, bool seen) { return f == Filter::kAll || (f == Filter::kSeen) == seen; };
  return ok(tasks, r.seen_task) && ok(datasets, r.seen_dataset);
}

std::string Scenario::name() const {
  return std::string("tasks=") + filter_name(tasks) + ",datasets=" + filter_name(datasets);
}

std::vector<Scenario> all_scenarios() {
  std::vector<Scenario> out;
  for (Filter t : {Filter::kSeen, Filter::kUnseen, Filter::kAll})
    for (Filter d : {Filter::kSeen, Filter::kUnseen, Filter::kAll}) out.push_back({t, d});
  return out;
}

const ReportCell* Report::find(const Scenario& s, int k, Granularity g) const {
  for (const auto& c : cells)
    if (c.scenario.tasks == s.tasks && c.scenario.datasets == s.datasets && c.k == k && c.granularity == g) return &c;
  return nullptr;
}

std::string Report::to_json() const {
  json cells_json = json::array();
  for (const auto& c : cells) {
    json j{{"tasks", filter_name(c.scenario.tasks)},
           {"datasets", filter_name(c.scenario.datasets)},
           {"k", c.k},
           {"granularity", granularity_name(c.granularity)},
           {"queries", c.queries}};
    j["f1"] = c.f1 ? json(*c.f1) : json(nullptr);
    j["absent"] = !c.f1.has_value();
    cells_json.push_back(j);
  }
  return json{{"name", name}, {"cells", cells_json}}.dump(2);
}

std::string Report::to_text() const {
  std::vector<std::pair<Granularity, int>> columns;
  std::vector<Scenario> rows;
  for (const auto& c : cells) {
    if (std::find(columns.begin(), columns.end(), std::make_pair(c.granularity, c.k)) == columns.end()) {
      columns.emplace_back(c.granularity, c.k);
    }
    if (std::none_of(rows.begin(), rows.end(), [&](const Scenario& s) {
          return s.tasks == c.scenario.tasks && s.datasets == c.scenario.datasets;
        })) {
      rows.push_back(c.scenario);
    }
  }
  std::ostringstream os;
  os << name << "\n";
  os << std::left << std::setw(30) << "scenario";
  for (const auto& [g, k] : columns) {
    os << std::right << std::setw(16) << (std::string(granularity_name(g)) + " k=" + std::to_string(k));
  }
  os << "\n";
  for (const auto& s : rows) {
    os << std::left << std::setw(30) << s.name();
    for (const auto& [g, k] : columns) {
      const ReportCell* c = find(s, k, g);
      std::ostringstream v;
      if (c && c->f1) {
        v << std::fixed << std::setprecision(3) << *c->f1;
      } else {
        v << "-";
      }
      os << std::right << std::setw(16) << v.str();
    }
    os << "\n";
  }
  return os.str();
}

Report eval_scenarios(std::span<const EmbeddingRecord> queries, std::span<const EmbeddingRecord> reference,
                      const std::vector<Scenario>& scenarios, const std::vector<int>& ks,
                      const std::vector<Granularity>& granularities, const std::string& name) {
  if (ks.empty()) throw ConfigError("eval_scenarios: no k values");
  for (int k : ks)
    if (k < 1) throw ConfigError("k must be >= 1");
  const int kmax = *std::max_element(ks.begin(), ks.end());
  Report report;
  report.name = name;
  for (const Scenario& s : scenarios) {
    std::vector<EmbeddingRecord> q, r;
    for (const auto& x : queries)
      if (s.admits(x)) q.push_back(x);
    for (const auto& x : reference)
      if (s.admits(x)) r.push_back(x);
    std::vector<std::vector<Neighbor>> neighbors;
    const bool present = !q.empty() && !r.empty();
    if (present) neighbors = nearest(q, r, kmax);
    for (Granularity g : granularities) {
      std::vector<std::string> truths;
      if (present)
        for (const auto& x : q) truths.push_back(record_label(x, g));
      for (int k : ks) {
        ReportCell cell{s, k, g, std::nullopt, static_cast<int>(q.size())};
        if (present) {
          std::vector<std::string> preds;
          preds.reserve(q.size());
          for (const auto& n : neighbors) preds.push_back(vote(n, r, k, g));
          cell.f1 = macro_f1(preds, truths);
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

std::map<std::string, Eigen::VectorXd> mean_task_embeddings(std::span<const EmbeddingRecord> records,
                                                            Granularity granularity) {
  std::map<std::string, Eigen::VectorXd> sums;
  std::map<std::string, long> counts;
  for (const auto& r : records) {
    const std::string label = record_label(r, granularity);
    auto [it, inserted] = sums.try_emplace(label, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r.vector.size())));
    if (static_cast<std::size_t>(it->second.size()) != r.vector.size()) {
      throw ShapeError("mean_task_embeddings: differing vector lengths");
    }
    for (std::size_t j = 0; j < r.vector.size(); ++j) it->second[static_cast<Eigen::Index>(j)] += r.vector[j];
    ++counts[label];
  }
  for (auto& [label, v] : sums) v /= static_cast<double>(counts[label]);
  return sums;
}

SimilarityMatrix similarity_matrix(const std::map<std::string, Eigen::VectorXd>& means,
                                   const std::vector<std::string>& order) {
  SimilarityMatrix m;
  m.labels = order;
  const auto n = static_cast<Eigen::Index>(order.size());
  if (n == 0) throw ContractError("similarity_matrix: no tasks");
  std::vector<Eigen::VectorXd> v;
  for (const auto& label : order) {
    const auto it = means.find(label);
    if (it == means.end()) throw ContractError("similarity_matrix: no mean for '" + label + "'");
    const double norm = it->second.norm();
    if (norm == 0.0) throw NumericError("similarity_matrix: zero-norm mean for '" + label + "'");
    v.push_back(it->second / norm);
  }
  m.raw.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.raw(i, i) = v[i].dot(v[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) m.raw(i, j) = m.raw(j, i) = v[i].dot(v[j]);
  }
  m.normalized = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      lo = std::min(lo, m.raw(i, j));
      hi = std::max(hi, m.raw(i, j));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      m.normalized(i, j) = hi > lo ? (m.raw(i, j) - lo) / (hi - lo) : 0.0;
    }
  }
  return m;
}

SimilarityMatrix similarity_matrix(const std::map<std::string, Eigen::VectorXd>& means) {
  std::vector<std::string> order;
  for (const auto& [label, v] : means) order.push_back(label);
  return similarity_matrix(means, order);
}

std::string SimilarityMatrix::to_csv(bool use_normalized) const {
  const Eigen::MatrixXd& m = use_normalized ? normalized : raw;
  std::ostringstream os;
  os << "task";
  for (const auto& l : labels) os << ',' << l;
  os << '\n' << std::setprecision(9);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << m(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace taco
