#include "taco/trainer.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taco/error.hpp"
#include "taco/parallel.hpp"
#include "taco/raster.hpp"

namespace taco {

using nlohmann::json;

const char* loss_mode_name(LossMode mode) { return mode == LossMode::kTaco ? "taco" : "simclr_baseline"; }

LossMode parse_loss_mode(const std::string& name) {
  if (name == "taco") return LossMode::kTaco;
  if (name == "simclr_baseline") return LossMode::kSimclrBaseline;
  throw ConfigError("unknown loss mode '" + name + "' (expected taco or simclr_baseline)");
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(lr >= 0)) throw ConfigError("lr must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  batch.validate();
  failure_batch.validate();
  if (failure_start < 0) throw ConfigError("failure_start must be >= 0");
  if (checkpoint_every < 0 || eval_every < 0) throw ConfigError("cadences must be >= 0");
  if (loss_mode == LossMode::kSimclrBaseline && batch.total() < 4) {
    throw ConfigError("simclr_baseline needs a batch of at least 4 views");
  }
  for (const auto& t : tasks)
    if (!parse_task(t)) throw ConfigError("unknown task '" + t + "'");
  effective_model().validate();
}

std::string TrainConfig::to_json() const {
  json j{{"iterations", iterations},
         {"lr", lr},
         {"momentum", momentum},
         {"weight_decay", weight_decay},
         {"tau", tau},
         {"base_pairs", batch.base_pairs},
         {"failure_tasks", failure_tasks},
         {"failure_start", failure_start},
         {"failure_base_pairs", failure_batch.base_pairs},
         {"failure_count", failure_batch.failure_count},
         {"loss_mode", loss_mode_name(loss_mode)},
         {"aggregation", aggregation == LossAggregation::kMean ? "mean" : "sum"},
         {"seed", seed},
         {"checkpoint_every", checkpoint_every},
         {"eval_every", eval_every},
         {"tasks", tasks},
         {"datasets", datasets},
         {"restrict_false_color", restrict_false_color},
         {"model", json::parse(model.to_json())}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  static const std::set<std::string> kKeys = {
      "iterations",    "lr",          "momentum",   "weight_decay",    "tau",
      "base_pairs",    "failure_tasks", "failure_start", "failure_base_pairs", "failure_count",
      "loss_mode",     "aggregation", "seed",       "checkpoint_every", "eval_every",
      "tasks",         "datasets",    "restrict_false_color", "model"};
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (!kKeys.count(k)) throw ConfigError("unknown training config key '" + k + "'");
    c.iterations = j.value("iterations", c.iterations);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.tau = j.value("tau", c.tau);
    c.batch.base_pairs = j.value("base_pairs", c.batch.base_pairs);
    c.failure_tasks = j.value("failure_tasks", c.failure_tasks);
    c.failure_start = j.value("failure_start", c.failure_start);
    c.failure_batch.base_pairs = j.value("failure_base_pairs", c.failure_batch.base_pairs);
    c.failure_batch.failure_count = j.value("failure_count", c.failure_batch.failure_count);
    c.loss_mode = parse_loss_mode(j.value("loss_mode", std::string("taco")));
    const std::string agg = j.value("aggregation", std::string("mean"));
    if (agg == "mean") {
      c.aggregation = LossAggregation::kMean;
    } else if (agg == "sum") {
      c.aggregation = LossAggregation::kSum;
    } else {
      throw ConfigError("aggregation must be 'mean' or 'sum'");
    }
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.tasks = j.value("tasks", c.tasks);
    c.datasets = j.value("datasets", c.datasets);
    c.restrict_false_color = j.value("restrict_false_color", c.restrict_false_color);
    if (j.contains("model")) c.model = EncoderConfig::from_json(j.at("model").dump());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read training config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<TaskType> TrainConfig::task_list() const {
  std::vector<TaskType> out;
  if (tasks.empty()) {
    for (TaskType t : all_tasks())
      if (task_info(t).seen) out.push_back(t);
  } else {
    for (const auto& name : tasks) {
      const auto t = parse_task(name);
      if (!t) throw ConfigError("unknown task '" + name + "'");
      out.push_back(*t);
    }
  }
  return out;
}

std::vector<std::string> TrainConfig::dataset_list(const Corpus& corpus) const {
  if (!datasets.empty()) {
    for (const auto& d : datasets) corpus.meta(d);
    return datasets;
  }
  std::vector<std::string> out;
  for (const auto& m : corpus.datasets)
    if (m.seen) out.push_back(m.dataset_id);
  return out;
}

EncoderConfig TrainConfig::effective_model() const {
  EncoderConfig m = model;
  m.in_channels = loss_mode == LossMode::kTaco ? 6 : 3;
  m.tau = tau;
  return m;
}

std::string MetricsLine::to_json() const {
  json j{{"iter", iter},
         {"loss", loss},
         {"lr", lr},
         {"failure_active", failure_active},
         {"batch", {{"size", batch_size}, {"pairs", pairs}, {"failure", failure_count}, {"tasks", distinct_tasks}}}};
  if (has_val_loss) j["val_loss"] = val_loss;
  return j.dump();
}

Image simclr_augment(const Image& image, Rng& rng) {
  const int h = image.height();
  const int w = image.width();
  const int ch = std::max(1, static_cast<int>(std::lround(0.8 * h)));
  const int cw = std::max(1, static_cast<int>(std::lround(0.8 * w)));
  const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h - ch + 1)));
  const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w - cw + 1)));
  Image crop(ch, cw);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) crop.at(c, y, x) = image.at(c, y0 + y, x0 + x);
  Image out = resize_bilinear(crop, h, w);
  if (uniform01(rng) < 0.5) out = hflip(out);
  return brightness(out, uniform_real(rng, 0.8, 1.2));
}

namespace {

struct Prepared {
  nn::Tensor4 input;
  std::vector<int> labels;    // class ids (taco)
  std::vector<int> pair_of;   // partner view (simclr)
  int pairs = 0;
  int failure_count = 0;
  int distinct_tasks = 0;
  bool failure_active = false;
};

class BatchSource {
 public:
  BatchSource(const TrainConfig& config, const BalancedSampler& sampler) : config_(config), sampler_(sampler) {}

  Prepared make(int iter, std::uint64_t stream) const {
    Rng rng(mix_seed(mix_seed(config_.seed, stream), static_cast<std::uint64_t>(iter)));
    const int side = config_.model.input_side;
    Prepared p;
    if (config_.loss_mode == LossMode::kTaco) {
      p.failure_active = config_.failure_tasks && iter >= config_.failure_start;
      const BatchSpec spec = p.failure_active ? config_.failure_batch : BatchSpec{config_.batch.base_pairs, 0};
      const Batch b = draw_batch(sampler_, spec, rng);
      p.input = stack_instances(b.instances, side);
      p.labels = b.class_labels();
      p.pairs = b.base_pairs;
      p.failure_count = b.failure_count;
      std::set<std::string> keys;
      for (const auto& t : b.instances)
        if (!t.is_failure) keys.insert(t.key.label());
      p.distinct_tasks = static_cast<int>(keys.size());
    } else {
      // total views = 4 * instances: in and out, two augmentations each.
      const int n = std::max(1, config_.batch.total() / 4);
      const auto instances = draw_instances(sampler_, n, rng);
      std::vector<Image> views;
      std::set<std::string> keys;
      for (const auto& t : instances) {
        keys.insert(t.key.label());
        for (const Image* img : {&t.input, &t.output}) {
          const int a = static_cast<int>(views.size());
          views.push_back(simclr_augment(*img, rng));
          views.push_back(simclr_augment(*img, rng));
          p.pair_of.push_back(a + 1);
          p.pair_of.push_back(a);
        }
      }
      p.input = stack_images(views, side);
      p.pairs = static_cast<int>(views.size() / 2);
      p.distinct_tasks = static_cast<int>(keys.size());
    }
    return p;
  }

 private:
  const TrainConfig& config_;
  const BalancedSampler& sampler_;
};

Eigen::MatrixXd to_matrix(const nn::Tensor4& z) {
  Eigen::MatrixXd m(z.n(), static_cast<Eigen::Index>(z.item_size()));
  for (int i = 0; i < z.n(); ++i) {
    const auto row = z.item(i);
    for (std::size_t j = 0; j < row.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

nn::Tensor4 to_tensor(const Eigen::MatrixXd& m, const nn::Shape4& shape) {
  nn::Tensor4 t(shape);
  for (int i = 0; i < shape.n; ++i) {
    auto row = t.item(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = static_cast<float>(m(i, static_cast<Eigen::Index>(j)));
  }
  return t;
}

LossReport batch_loss(const TrainConfig& config, const Prepared& p, const Eigen::MatrixXd& z) {
  if (config.loss_mode == LossMode::kTaco) return sup_contrastive_loss(z, p.labels, config.tau, config.aggregation);
  return self_contrastive_loss(z, p.pair_of, config.tau, config.aggregation);
}

}  // namespace

TrainResult train(const TrainConfig& config, const Corpus& corpus, const SplitAssignment& split,
                  const TrainOutputs& outputs) {
  config.validate();
  configure_threads();
  CorpusIndex::Options opts;
  opts.tasks = config.task_list();
  opts.dataset_ids = config.dataset_list(corpus);
  opts.policy.restrict_false_color = config.restrict_false_color;
  const CorpusIndex index = CorpusIndex::build(corpus, split, Split::kTrain, opts);
  const BalancedSampler sampler(index);
  const BatchSource source(config, sampler);

  std::optional<CorpusIndex> val_index;
  std::optional<BalancedSampler> val_sampler;
  std::optional<Prepared> val_batch;
  if (config.eval_every > 0) {
    val_index.emplace(CorpusIndex::build(corpus, split, Split::kVal, opts));
    val_sampler.emplace(*val_index);
    val_batch = BatchSource(config, *val_sampler).make(0, 0x7a1ULL);
  }

  TrainResult result{TaskEncoder(config.effective_model(), config.seed), {}, {}};
  TaskEncoder& encoder = result.encoder;

  std::ofstream metrics_out;
  if (!outputs.out_dir.empty()) {
    std::filesystem::create_directories(outputs.out_dir);
    metrics_out.open(outputs.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics_out) throw DataError("cannot write metrics log in " + outputs.out_dir.string());
  }
  const nn::SgdOptions sgd{config.lr, config.momentum, config.weight_decay};
  const bool prefetch = worker_threads() > 1;
  std::future<Prepared> next;
  if (prefetch && config.iterations > 0) next = std::async(std::launch::async, [&] { return source.make(0, 0); });

  for (int iter = 0; iter < config.iterations; ++iter) {
    Prepared p = prefetch ? next.get() : source.make(iter, 0);
    if (prefetch && iter + 1 < config.iterations) {
      next = std::async(std::launch::async, [&source, iter] { return source.make(iter + 1, 0); });
    }
    MetricsLine line;
    try {
      auto etape = encoder.make_encoder_tape();
      auto ptape = encoder.make_projector_tape();
      const nn::Tensor4 features = encoder.encode(p.input, nn::Mode::kTrain, etape.get());
      const nn::Tensor4 z = encoder.project(features, ptape.get());
      const LossReport report = batch_loss(config, p, to_matrix(z));
      const nn::Tensor4 dfeatures = encoder.project_backward(*ptape, to_tensor(report.grad, z.shape()));
      encoder.encode_backward(*etape, dfeatures);
      nn::sgd_step(encoder.params(), sgd);
      line.loss = report.loss;
      if (val_batch && (iter + 1) % config.eval_every == 0) {
        const nn::Tensor4 vz = encoder.project(encoder.encode(val_batch->input, nn::Mode::kEval));
        line.has_val_loss = true;
        line.val_loss = batch_loss(config, *val_batch, to_matrix(vz)).loss;
      }
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    line.iter = iter;
    line.lr = config.lr;
    line.failure_active = p.failure_active;
    line.batch_size = p.input.n();
    line.pairs = p.pairs;
    line.failure_count = p.failure_count;
    line.distinct_tasks = p.distinct_tasks;
    if (metrics_out.is_open()) metrics_out << line.to_json() << '\n' << std::flush;
    if (outputs.on_iteration) outputs.on_iteration(line);
    result.metrics.push_back(line);
    if (!outputs.out_dir.empty() && config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0) {
      save_checkpoint((outputs.out_dir / ("checkpoint_" + std::to_string(iter + 1) + ".bin")).string(), encoder);
    }
  }
  if (!outputs.out_dir.empty()) {
    result.checkpoint_path = outputs.out_dir / "checkpoint.bin";
    save_checkpoint(result.checkpoint_path.string(), encoder);
  }
  return result;
}

}  // namespace taco
