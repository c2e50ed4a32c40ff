#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <iostream>

#include "manifest.hpp"
#include "taco/analysis.hpp"
#include "taco/corpus.hpp"
#include "taco/embedding_io.hpp"
#include "taco/error.hpp"
#include "taco/parallel.hpp"
#include "taco/sampling.hpp"
#include "taco/sweep.hpp"
#include "taco/trainer.hpp"

namespace taco::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required flag ") + flag);
}

SplitAssignment load_split(const fs::path& corpus_dir, const Corpus& corpus, std::uint64_t seed) {
  const fs::path p = corpus_dir / "split.json";
  if (fs::exists(p)) return SplitAssignment::load(p);
  return split_corpus(corpus.samples, SplitRatios{}, seed);
}

std::vector<TaskType> task_selection(const std::vector<std::string>& names) {
  if (names.empty()) return all_tasks();
  std::vector<TaskType> out;
  for (const auto& n : names) {
    const auto t = parse_task(n);
    if (!t) throw ConfigError("unknown task '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

TaskEncoder open_checkpoint(const Args& args) {
  require(args.checkpoint, "--checkpoint");
  if (!args.config.empty()) {
    TrainConfig tc = TrainConfig::load(args.config);
    if (args.tau) tc.tau = *args.tau;
    if (!args.loss_mode.empty()) tc.loss_mode = parse_loss_mode(args.loss_mode);
    return load_checkpoint(args.checkpoint, tc.effective_model());
  }
  return load_checkpoint(args.checkpoint);
}

std::vector<Scenario> scenario_selection(const std::vector<std::string>& names) {
  if (names.empty()) return all_scenarios();
  std::vector<Scenario> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& s : all_scenarios()) out.push_back(s);
      continue;
    }
    const auto colon = n.find(':');
    if (colon == std::string::npos) throw ConfigError("scenario must be 'tasks:datasets', e.g. seen:unseen");
    out.push_back({parse_filter(n.substr(0, colon)), parse_filter(n.substr(colon + 1))});
  }
  return out;
}

void log(const Args& args, const std::string& msg) {
  if (!args.quiet) std::cerr << msg << std::endl;
}

}  // namespace

int cmd_synth_corpus(const Args& args) {
  require(args.config, "--config");
  require(args.out, "--out");
  CorpusSpec spec = load_corpus_spec(args.config);
  if (args.seed) spec.seed = *args.seed;
  spec.validate();

  RunManifest m;
  m.command = "synth-corpus";
  m.config = json::parse(fs::exists(args.config) ? [&] {
    std::ifstream in(args.config);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }() : std::string("{}"));
  m.config["seed"] = spec.seed;
  m.seed = spec.seed;
  m.inputs["config"] = args.config;
  m.outputs["corpus"] = args.out;
  m.outputs["split"] = (fs::path(args.out) / "split.json").string();
  fs::create_directories(args.out);
  m.write(args.out);

  const Corpus corpus = generate_synthetic_corpus(spec);
  write_corpus(corpus, args.out);
  split_corpus(corpus.samples, SplitRatios{}, spec.seed).save(fs::path(args.out) / "split.json");
  log(args, "wrote " + std::to_string(corpus.samples.size()) + " samples in " +
                std::to_string(corpus.datasets.size()) + " datasets to " + args.out);
  return 0;
}

int cmd_train(const Args& args) {
  require(args.config, "--config");
  require(args.corpus, "--corpus");
  require(args.out, "--out");
  TrainConfig config = TrainConfig::load(args.config);
  if (args.seed) config.seed = *args.seed;
  if (!args.loss_mode.empty()) config.loss_mode = parse_loss_mode(args.loss_mode);
  if (args.tau) config.tau = *args.tau;
  config.validate();

  const Corpus corpus = ingest_corpus(args.corpus);
  const SplitAssignment split = load_split(args.corpus, corpus, config.seed);

  RunManifest m;
  m.command = "train";
  m.config = json::parse(config.to_json());
  m.seed = config.seed;
  m.inputs["config"] = args.config;
  m.inputs["corpus"] = args.corpus;
  m.outputs["checkpoint"] = (fs::path(args.out) / "checkpoint.bin").string();
  m.outputs["metrics"] = (fs::path(args.out) / "metrics.jsonl").string();
  fs::create_directories(args.out);
  m.write(args.out);

  TrainOutputs outputs;
  outputs.out_dir = args.out;
  outputs.on_iteration = [&](const MetricsLine& line) {
    if ((line.iter + 1) % 100 == 0 || line.iter + 1 == config.iterations) {
      log(args, "iter " + std::to_string(line.iter + 1) + "/" + std::to_string(config.iterations) +
                    " loss " + std::to_string(line.loss));
    }
  };
  const TrainResult result = train(config, corpus, split, outputs);
  log(args, "checkpoint: " + result.checkpoint_path.string());
  return 0;
}

int cmd_embed(const Args& args) {
  require(args.corpus, "--corpus");
  require(args.out, "--out");
  TaskEncoder encoder = open_checkpoint(args);
  const std::uint64_t seed = args.seed.value_or(0);
  const Corpus corpus = ingest_corpus(args.corpus);
  const SplitAssignment split = load_split(args.corpus, corpus, seed);
  const Split which = parse_split(args.split);
  const auto tasks = task_selection(args.tasks);

  RunManifest m;
  m.command = "embed";
  m.config = json{{"split", args.split}, {"tasks", args.tasks}, {"model", json::parse(encoder.config().to_json())}};
  m.seed = seed;
  m.inputs["checkpoint"] = args.checkpoint;
  m.inputs["corpus"] = args.corpus;
  m.outputs["embeddings"] = (fs::path(args.out) / "embeddings.csv").string();
  fs::create_directories(args.out);
  m.write(args.out);

  const auto records = embed_split(encoder, corpus, split, which, tasks, seed);
  export_embeddings(records, fs::path(args.out) / "embeddings.csv", embedding_dim(encoder));
  log(args, "embedded " + std::to_string(records.size()) + " instances");
  return 0;
}

int cmd_eval(const Args& args) {
  require(args.out, "--out");
  if (args.checkpoint.empty() && args.baseline_embeddings.empty()) {
    throw ConfigError("eval needs --checkpoint and/or --baseline-embeddings");
  }
  const std::uint64_t seed = args.seed.value_or(0);
  const auto scenarios = scenario_selection(args.scenarios);
  std::vector<Granularity> granularities;
  for (const auto& g : args.granularities) granularities.push_back(parse_granularity(g));
  for (int k : args.ks)
    if (k < 1) throw ConfigError("--k values must be >= 1");

  RunManifest m;
  m.command = "eval";
  m.config = json{{"k", args.ks}, {"scenarios", args.scenarios}, {"granularities", args.granularities},
                  {"max_reference_per_dataset", args.max_reference_per_dataset}};
  m.seed = seed;
  if (!args.checkpoint.empty()) m.inputs["checkpoint"] = args.checkpoint;
  if (!args.corpus.empty()) m.inputs["corpus"] = args.corpus;
  if (!args.baseline_embeddings.empty()) m.inputs["baseline_embeddings"] = args.baseline_embeddings;
  m.outputs["report_json"] = (fs::path(args.out) / "report.json").string();
  m.outputs["report_text"] = (fs::path(args.out) / "report.txt").string();
  fs::create_directories(args.out);
  m.write(args.out);

  std::vector<Report> reports;
  if (!args.checkpoint.empty()) {
    require(args.corpus, "--corpus");
    TaskEncoder encoder = open_checkpoint(args);
    const Corpus corpus = ingest_corpus(args.corpus);
    const SplitAssignment split = load_split(args.corpus, corpus, seed);
    const auto tasks = task_selection(args.tasks);
    const auto reference =
        embed_split(encoder, corpus, split, Split::kTrain, tasks, seed, args.max_reference_per_dataset);
    const auto queries = embed_split(encoder, corpus, split, Split::kTest, tasks, seed);
    reports.push_back(eval_scenarios(queries, reference, scenarios, args.ks, granularities, "taco"));
  }
  if (!args.baseline_embeddings.empty()) {
    const auto records = import_embeddings(args.baseline_embeddings);
    std::vector<EmbeddingRecord> reference, queries;
    for (const auto& r : records) {
      if (r.split == Split::kTrain) reference.push_back(r);
      if (r.split == Split::kTest) queries.push_back(r);
    }
    const std::string name =
        args.baseline_name.empty() ? fs::path(args.baseline_embeddings).stem().string() : args.baseline_name;
    reports.push_back(eval_scenarios(queries, reference, scenarios, args.ks, granularities, name));
  }
  json all = json::array();
  std::string text;
  for (const auto& r : reports) {
    all.push_back(json::parse(r.to_json()));
    text += r.to_text() + "\n";
  }
  write_text_atomic(fs::path(args.out) / "report.json", json{{"reports", all}}.dump(2) + "\n");
  write_text_atomic(fs::path(args.out) / "report.txt", text);
  if (!args.quiet) std::cout << text;
  return 0;
}

int cmd_sweep(const Args& args) {
  require(args.corpus, "--corpus");
  require(args.out, "--out");
  TaskEncoder encoder = open_checkpoint(args);
  const std::uint64_t seed = args.seed.value_or(0);
  SweepSpec spec = SweepSpec::defaults(parse_sweep_kind(args.kind));
  spec.probe_count = args.probes;
  spec.seed = seed;
  if (!args.tasks.empty()) spec.reference_tasks = task_selection(args.tasks);
  spec.validate();
  const Corpus corpus = ingest_corpus(args.corpus);
  const SplitAssignment split = load_split(args.corpus, corpus, seed);

  const std::string file = std::string("sweep_") + sweep_kind_name(spec.kind) + ".csv";
  RunManifest m;
  m.command = "sweep";
  json refs = json::array();
  for (TaskType t : spec.reference_tasks) refs.push_back(std::string(task_name(t)));
  m.config = json{{"kind", sweep_kind_name(spec.kind)}, {"grid", spec.grid}, {"reference_tasks", refs},
                  {"probes", spec.probe_count}};
  m.seed = seed;
  m.inputs["checkpoint"] = args.checkpoint;
  m.inputs["corpus"] = args.corpus;
  m.outputs["curves"] = (fs::path(args.out) / file).string();
  fs::create_directories(args.out);
  m.write(args.out);

  const auto curves = adaptation_sweep(encoder, corpus, split, spec);
  write_text_atomic(fs::path(args.out) / file, sweep_to_csv(curves));
  log(args, "wrote " + (fs::path(args.out) / file).string());
  return 0;
}

int cmd_simmatrix(const Args& args) {
  require(args.corpus, "--corpus");
  require(args.out, "--out");
  TaskEncoder encoder = open_checkpoint(args);
  const std::uint64_t seed = args.seed.value_or(0);
  const Corpus corpus = ingest_corpus(args.corpus);
  const SplitAssignment split = load_split(args.corpus, corpus, seed);
  const auto tasks = task_selection(args.tasks);

  RunManifest m;
  m.command = "simmatrix";
  m.config = json{{"tasks", args.tasks}, {"split", args.split}};
  m.seed = seed;
  m.inputs["checkpoint"] = args.checkpoint;
  m.inputs["corpus"] = args.corpus;
  m.outputs["raw"] = (fs::path(args.out) / "simmatrix_raw.csv").string();
  m.outputs["normalized"] = (fs::path(args.out) / "simmatrix_normalized.csv").string();
  fs::create_directories(args.out);
  m.write(args.out);

  const auto records = embed_split(encoder, corpus, split, parse_split(args.split), tasks, seed);
  const auto means = mean_task_embeddings(records, Granularity::kTask);
  std::vector<std::string> order;
  for (TaskType t : tasks)
    if (means.count(std::string(task_name(t)))) order.emplace_back(task_name(t));
  const SimilarityMatrix sm = similarity_matrix(means, order);
  write_text_atomic(fs::path(args.out) / "simmatrix_raw.csv", sm.to_csv(false));
  write_text_atomic(fs::path(args.out) / "simmatrix_normalized.csv", sm.to_csv(true));
  log(args, "similarity matrix over " + std::to_string(order.size()) + " tasks");
  return 0;
}

}  // namespace taco::cli
