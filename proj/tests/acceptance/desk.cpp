#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "acceptance.hpp"
#include "json.hpp"
#include "taco/embedding_io.hpp"
#include "taco/error.hpp"
#include "taco/sweep.hpp"

namespace taco::acceptance {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

double f1_of(const Report& report, Filter tasks, Filter datasets, Granularity g) {
  const ReportCell* cell = report.find(Scenario{tasks, datasets}, 1, g);
  if (cell == nullptr || !cell->f1) return std::numeric_limits<double>::quiet_NaN();
  return *cell->f1;
}

std::vector<float> to_float(const Eigen::VectorXd& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void Desk::build_corpus() {
  const CorpusSpec spec = load_corpus_spec(options_.configs_dir / "desk_corpus.json");
  log("generating desk corpus");
  generated_ = generate_synthetic_corpus(spec);
  const fs::path root = options_.work_dir / "corpus";
  fs::remove_all(root);
  write_corpus(*generated_, root);
  corpus_ = ingest_corpus(root);
  split_ = split_corpus(corpus_->samples, SplitRatios{}, spec.seed);
  log("desk corpus: " + std::to_string(corpus_->samples.size()) + " samples in " +
      std::to_string(corpus_->datasets.size()) + " datasets, " + std::to_string(split_->count(Split::kTest)) +
      " in test");
}

const Corpus& Desk::corpus() {
  if (!corpus_) build_corpus();
  return *corpus_;
}

const Corpus& Desk::generated() {
  if (!generated_) build_corpus();
  return *generated_;
}

const SplitAssignment& Desk::split() {
  if (!split_) build_corpus();
  return *split_;
}

TrainConfig Desk::run_config(const std::string& name) {
  TrainConfig config = TrainConfig::load(options_.configs_dir / "desk_train.json");
  if (name == "taco_failure") {
    config.failure_tasks = true;
  } else if (name == "simclr") {
    config.loss_mode = LossMode::kSimclrBaseline;
  } else if (name != "taco" && name != "untrained") {
    throw ConfigError("unknown desk run '" + name + "'");
  }
  return config;
}

std::vector<TaskType> Desk::training_tasks() { return run_config("taco").task_list(); }

std::vector<TaskType> Desk::eval_tasks() {
  std::vector<TaskType> tasks = training_tasks();
  tasks.push_back(TaskType::kDenoising);
  return tasks;
}

TrainedRun& Desk::run(const std::string& name) {
  for (auto& r : runs_)
    if (r->name == name) return *r;
  auto r = std::make_unique<TrainedRun>();
  r->name = name;
  r->config = run_config(name);
  const Corpus& data = corpus();
  if (name == "untrained") {
    r->encoder = std::make_unique<TaskEncoder>(r->config.effective_model(), r->config.seed);
    runs_.push_back(std::move(r));
    return *runs_.back();
  }
  const fs::path dir = options_.work_dir / "runs" / name;
  const fs::path stamp_path = dir / "stamp.json";
  const std::string config_digest = hex(hash_string(r->config.to_json()));
  const std::string corpus_digest = hex(hash_string(read_text(options_.configs_dir / "desk_corpus.json")));
  if (!options_.fresh && fs::exists(stamp_path) && fs::exists(dir / "checkpoint.bin")) {
    const json stamp = json::parse(read_text(stamp_path));
    if (stamp.value("config_digest", "") == config_digest && stamp.value("corpus_digest", "") == corpus_digest) {
      r->encoder = std::make_unique<TaskEncoder>(
          load_checkpoint((dir / "checkpoint.bin").string(), r->config.effective_model()));
      r->train_seconds = stamp.at("seconds").get<double>();
      r->cached = true;
      log("run " + name + ": reusing checkpoint trained in " + fmt(r->train_seconds, 4) + " s");
    }
  }
  if (!r->encoder) {
    log("run " + name + ": training " + std::to_string(r->config.iterations) + " iterations");
    TrainOutputs outputs;
    outputs.out_dir = dir;
    outputs.on_iteration = [&](const MetricsLine& m) {
      if ((m.iter + 1) % 500 == 0) log("  " + name + " iter " + std::to_string(m.iter + 1) + " loss " + fmt(m.loss));
    };
    const Stopwatch clock;
    TrainResult result = train(r->config, data, split(), outputs);
    r->train_seconds = clock.seconds();
    r->encoder = std::make_unique<TaskEncoder>(std::move(result.encoder));
    std::ofstream(stamp_path) << json{{"config_digest", config_digest},
                                      {"corpus_digest", corpus_digest},
                                      {"seconds", r->train_seconds}}
                                     .dump(2)
                              << "\n";
  }
  runs_.push_back(std::move(r));
  return *runs_.back();
}

const std::vector<EmbeddingRecord>& Desk::records(TrainedRun& run, Split which) {
  auto& slot = which == Split::kTrain ? run.train_records : run.test_records;
  if (!slot) slot = embed_split(*run.encoder, corpus(), split(), which, eval_tasks(), 0);
  return *slot;
}

Outcome desk_training(Desk& desk) {
  const std::vector<Granularity> grans = {Granularity::kVisualTask, Granularity::kTask};
  auto evaluate = [&](const std::string& name) {
    TrainedRun& r = desk.run(name);
    return eval_scenarios(desk.records(r, Split::kTest), desk.records(r, Split::kTrain), all_scenarios(), {1}, grans,
                          name);
  };
  const Report taco = evaluate("taco");
  const Report untrained = evaluate("untrained");
  const Report simclr = evaluate("simclr");
  const double seconds = desk.run("taco").train_seconds;

  const double f1 = f1_of(taco, Filter::kAll, Filter::kAll, Granularity::kVisualTask);
  const double f1_seen = f1_of(taco, Filter::kSeen, Filter::kSeen, Granularity::kVisualTask);
  const double f1_untrained = f1_of(untrained, Filter::kAll, Filter::kAll, Granularity::kVisualTask);
  const double task_taco = f1_of(taco, Filter::kAll, Filter::kAll, Granularity::kTask);
  const double task_simclr = f1_of(simclr, Filter::kAll, Filter::kAll, Granularity::kTask);
  log("taco report\n" + taco.to_text());
  log("untrained report\n" + untrained.to_text());
  log("simclr report\n" + simclr.to_text());

  const bool pass = f1 >= 0.80 && f1 - f1_untrained >= 0.20 && task_simclr < task_taco && seconds < 1800.0;
  return {pass, "visual-task F1 " + fmt(f1) + " (seen:seen " + fmt(f1_seen) + "), untrained " + fmt(f1_untrained) +
                    ", task F1 taco " + fmt(task_taco) + " vs simclr " + fmt(task_simclr) + ", training " +
                    fmt(seconds, 4) + " s"};
}

namespace {

struct Probe {
  TaskInstance matched;
  TaskInstance mixed;
  std::string label;
};

std::vector<Probe> failure_probes(Desk& desk, int count) {
  const Corpus& corpus = desk.corpus();
  CorpusIndex::Options opts;
  opts.tasks = desk.training_tasks();
  for (const auto& m : corpus.datasets)
    if (m.seen) opts.dataset_ids.push_back(m.dataset_id);
  const CorpusIndex index = CorpusIndex::build(corpus, desk.split(), Split::kTest, opts);
  Rng rng(808);
  std::vector<Probe> probes;
  while (static_cast<int>(probes.size()) < count) {
    const std::size_t t = uniform_index(rng, index.num_tasks());
    const auto& members = index.members()[t];
    const std::size_t a = uniform_index(rng, members.size());
    std::size_t b = uniform_index(rng, members.size() - 1);
    if (b >= a) ++b;
    const Sample& sj = corpus.samples[members[a]];
    const Sample& sl = corpus.samples[members[b]];
    const DatasetMeta& meta = corpus.meta(sj.dataset_id);
    const TaskType task = index.keys()[t].task;
    const std::uint64_t seed = rng();
    try {
      Probe p;
      p.matched = synthesize_task_instance(sj, meta, task, seed);
      const TaskInstance other = synthesize_task_instance(sl, meta, task, mix_seed(seed, 1));
      p.mixed = p.matched;
      p.mixed.output = other.output;
      p.label = index.keys()[t].label();
      probes.push_back(std::move(p));
    } catch (const SkipInstance&) {
    }
  }
  return probes;
}

double farther_fraction(Desk& desk, TrainedRun& run, const std::vector<Probe>& probes) {
  const auto& test = desk.records(run, Split::kTest);
  const auto means = mean_task_embeddings(test, Granularity::kVisualTask);
  std::vector<TaskInstance> matched, mixed;
  for (const auto& p : probes) {
    matched.push_back(p.matched);
    mixed.push_back(p.mixed);
  }
  const auto em = embed_instances(*run.encoder, matched);
  const auto ex = embed_instances(*run.encoder, mixed);
  int farther = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const std::vector<float> mean = to_float(means.at(probes[i].label));
    if (cosine_distance(ex[i].vector, mean) > cosine_distance(em[i].vector, mean)) ++farther;
  }
  return static_cast<double>(farther) / static_cast<double>(probes.size());
}

}  // namespace

Outcome failure_effect(Desk& desk) {
  const std::vector<Probe> probes = failure_probes(desk, 500);
  const double with = farther_fraction(desk, desk.run("taco_failure"), probes);
  const double without = farther_fraction(desk, desk.run("taco"), probes);
  return {with > without, "mismatched pairs farther than matched: with failure tasks " + fmt(with) + ", without " +
                              fmt(without) + " (" + std::to_string(probes.size()) + " probes)"};
}

Outcome sweep_shapes(Desk& desk) {
  TrainedRun& run = desk.run("taco");
  auto curve_for = [&](SweepKind kind, TaskType reference) {
    const auto curves = adaptation_sweep(*run.encoder, desk.corpus(), desk.split(), SweepSpec::defaults(kind));
    std::ofstream(desk.work_dir() / (std::string("sweep_") + sweep_kind_name(kind) + ".csv")) << sweep_to_csv(curves);
    for (const auto& c : curves)
      if (c.reference == reference) return c;
    throw ContractError("sweep has no curve for the reference task");
  };
  const SweepCurve bright = curve_for(SweepKind::kBrightness, TaskType::kIdentity);
  const SweepCurve rot = curve_for(SweepKind::kRotation, TaskType::kIdentity);
  const SweepCurve noisy = curve_for(SweepKind::kNoisySegmentation, TaskType::kSegmentation);

  const double bright_min = bright.grid[argmin(bright.mean)];
  const double rot_min = rot.grid[argmin(rot.mean)];
  std::vector<double> index(noisy.grid.size());
  std::iota(index.begin(), index.end(), 0.0);
  const double rho = spearman(index, noisy.mean);

  const bool a = std::abs(bright_min - 1.0) < 1e-9;
  const bool b = std::abs(rot_min) < 1e-9 || std::abs(rot_min - 360.0) < 1e-9;
  const bool c = rho >= 0.9;
  return {a && b && c, std::string("brightness argmin ") + fmt(bright_min) + (a ? "" : " (want 1)") +
                           ", rotation argmin " + fmt(rot_min) + (b ? "" : " (want 0 or 360)") +
                           ", noisy segmentation spearman " + fmt(rho) + (c ? "" : " (want >= 0.9)")};
}

Outcome similarity_sanity(Desk& desk) {
  TrainedRun& run = desk.run("taco");
  const auto records = embed_split(*run.encoder, desk.corpus(), desk.split(), Split::kTest, all_tasks(), 0);
  const auto means = mean_task_embeddings(records, Granularity::kTask);
  std::vector<std::string> order;
  for (TaskType t : all_tasks())
    if (means.count(std::string(task_name(t)))) order.emplace_back(task_name(t));
  const SimilarityMatrix m = similarity_matrix(means, order);
  std::ofstream(desk.work_dir() / "similarity.csv") << m.to_csv(false);

  double asym = 0.0, diag = 0.0;
  for (Eigen::Index i = 0; i < m.raw.rows(); ++i) {
    diag = std::max(diag, std::abs(m.raw(i, i) - 1.0));
    for (Eigen::Index j = 0; j < m.raw.cols(); ++j) asym = std::max(asym, std::abs(m.raw(i, j) - m.raw(j, i)));
  }
  auto at = [&](const std::string& name) {
    const auto it = std::find(order.begin(), order.end(), name);
    if (it == order.end()) throw ContractError("similarity matrix lacks " + name);
    return it - order.begin();
  };
  const std::vector<std::string> geometric = {"rotate90", "rotate180", "rotate270", "horizontal_flip"};
  const std::vector<std::string> generative = {"inpainting", "denoising"};
  double within = 0.0, across = 0.0;
  int nw = 0, na = 0;
  for (std::size_t i = 0; i < geometric.size(); ++i) {
    for (std::size_t j = i + 1; j < geometric.size(); ++j, ++nw) within += m.raw(at(geometric[i]), at(geometric[j]));
    for (const auto& g : generative) {
      across += m.raw(at(geometric[i]), at(g));
      ++na;
    }
  }
  within /= nw;
  across /= na;
  const bool pass = asym <= 1e-6 && diag <= 1e-6 && within > across;
  return {pass, std::to_string(order.size()) + " tasks, asymmetry " + fmt(asym, 3) + ", diagonal error " +
                    fmt(diag, 3) + ", geometric within " + fmt(within) + " vs to generative " + fmt(across)};
}

Outcome round_trips(Desk& desk) {
  std::vector<std::string> failures;
  const Corpus& generated = desk.generated();
  const Corpus& ingested = desk.corpus();
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : ingested.samples) by_id[s.sample_id] = &s;
  bool corpus_ok = by_id.size() == generated.samples.size() && ingested.datasets.size() == generated.datasets.size();
  for (const auto& s : generated.samples) {
    const auto it = by_id.find(s.sample_id);
    if (it == by_id.end()) {
      corpus_ok = false;
      continue;
    }
    corpus_ok = corpus_ok && it->second->image == quantize8(s.image) && it->second->mask == s.mask &&
                it->second->dataset_id == s.dataset_id;
  }
  for (const auto& m : generated.datasets) corpus_ok = corpus_ok && ingested.meta(m.dataset_id) == m;
  if (!corpus_ok) failures.push_back("corpus");

  const fs::path again = desk.work_dir() / "corpus_again";
  fs::remove_all(again);
  write_corpus(ingested, again);
  const Corpus twice = ingest_corpus(again);
  bool stable = twice.samples.size() == ingested.samples.size();
  for (std::size_t i = 0; stable && i < twice.samples.size(); ++i) stable = twice.samples[i] == ingested.samples[i];
  fs::remove_all(again);
  if (!stable) failures.push_back("corpus rewrite");

  TrainedRun& run = desk.run("taco");
  std::vector<EmbeddingRecord> records = desk.records(run, Split::kTest);
  Rng rng(1111);
  const int dim = embedding_dim(*run.encoder);
  const std::vector<float> extremes = {std::numeric_limits<float>::max(), -std::numeric_limits<float>::max(),
                                       std::numeric_limits<float>::min(), std::numeric_limits<float>::denorm_min(),
                                       -0.0f, 1.0f / 3.0f};
  for (int i = 0; i < 8; ++i) {
    EmbeddingRecord r = records[uniform_index(rng, records.size())];
    r.sample_id += "_extreme" + std::to_string(i);
    for (auto& v : r.vector) v = extremes[uniform_index(rng, extremes.size())];
    r.is_failure = r.key.failure = i % 2 == 0;
    records.push_back(std::move(r));
  }
  const fs::path path = desk.work_dir() / "embeddings_roundtrip.csv";
  export_embeddings(records, path, dim);
  const auto back = import_embeddings(path);
  bool emb_ok = back.size() == records.size();
  for (std::size_t i = 0; emb_ok && i < back.size(); ++i) {
    emb_ok = back[i] == records[i];
    for (std::size_t c = 0; emb_ok && c < back[i].vector.size(); ++c)
      emb_ok = std::signbit(back[i].vector[c]) == std::signbit(records[i].vector[c]);
  }
  if (!emb_ok) failures.push_back("embeddings");

  std::string detail = std::to_string(generated.samples.size()) + " samples, " + std::to_string(records.size()) +
                       " embedding records";
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

}  // namespace taco::acceptance
