#include "taco/model.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "taco/error.hpp"
#include "taco/rng.hpp"

namespace taco {

using nn::Mode;
using nn::Tensor4;
using nlohmann::json;

struct BlockTape {
  Tensor4 x;
  nn::BatchNormCache bn1;
  Tensor4 a1;
  Tensor4 h1;
  Tensor4 c1;
  nn::BatchNormCache bn2;
  Tensor4 a2;
  Tensor4 h2;
};

struct EncoderTape {
  Tensor4 input;
  nn::BatchNormCache bn0;
  Tensor4 a0;
  Tensor4 r0;
  nn::MaxPoolCache pool;
  std::vector<BlockTape> blocks;
  Tensor4 xf;
  nn::BatchNormCache bnf;
  Tensor4 af;
  Tensor4 rf;
  nn::BatchNormCache bne;
  Tensor4 ae;
  Tensor4 re;
};

struct ProjectorTape {
  Tensor4 features;
  Tensor4 h;
  Tensor4 r;
  Tensor4 u;
  Tensor4 z;
};

namespace {

struct BlockSpec {
  std::string name;
  int in_width;
  int out_width;
  int stride;
  bool projection;
};

std::vector<BlockSpec> block_specs(const EncoderConfig& c) {
  std::vector<BlockSpec> out;
  int in = c.widths.front();
  for (std::size_t s = 0; s < c.widths.size(); ++s) {
    for (int b = 0; b < c.blocks_per_stage; ++b) {
      const int stride = (s > 0 && b == 0) ? 2 : 1;
      const int w = c.widths[s];
      out.push_back({"s" + std::to_string(s) + ".b" + std::to_string(b), in, w, stride, stride != 1 || in != w});
      in = w;
    }
  }
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_side < 8) throw ConfigError("encoder input_side must be >= 8");
  if (in_channels < 1) throw ConfigError("encoder in_channels must be positive");
  if (widths.empty()) throw ConfigError("encoder needs at least one stage");
  for (int w : widths)
    if (w <= 0) throw ConfigError("encoder stage widths must be positive");
  if (blocks_per_stage < 1) throw ConfigError("blocks_per_stage must be positive");
  if (feature_dim < 1 || projector_out < 1 || projector_hidden < 0) {
    throw ConfigError("encoder feature/projector widths must be positive");
  }
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  // stem /2, pool /2, one /2 per extra stage
  int side = input_side / 2 / 2;
  for (std::size_t s = 1; s < widths.size(); ++s) side = (side + 1) / 2;
  if (side < 1) throw ConfigError("input_side too small for the number of stages");
}

std::string EncoderConfig::to_json() const {
  json j{{"input_side", input_side},
         {"in_channels", in_channels},
         {"widths", widths},
         {"blocks_per_stage", blocks_per_stage},
         {"feature_dim", feature_dim},
         {"projector_hidden", projector_hidden},
         {"projector_out", projector_out},
         {"tau", tau},
         {"normalize_projector", normalize_projector}};
  return j.dump();
}

EncoderConfig EncoderConfig::from_json(const std::string& text) {
  static const std::set<std::string> kKeys = {"input_side",    "in_channels",      "widths",
                                              "blocks_per_stage", "feature_dim",   "projector_hidden",
                                              "projector_out", "tau",              "normalize_projector"};
  EncoderConfig c;
  try {
    const json j = json::parse(text);
    for (const auto& [k, v] : j.items()) {
      if (!kKeys.count(k)) throw ConfigError("unknown model config key '" + k + "'");
    }
    c.input_side = j.value("input_side", c.input_side);
    c.in_channels = j.value("in_channels", c.in_channels);
    c.widths = j.value("widths", c.widths);
    c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.projector_hidden = j.value("projector_hidden", c.projector_hidden);
    c.projector_out = j.value("projector_out", c.projector_out);
    c.tau = j.value("tau", c.tau);
    c.normalize_projector = j.value("normalize_projector", c.normalize_projector);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t EncoderConfig::digest() const { return hash_string(to_json()); }

TaskEncoder::TaskEncoder(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(mix_seed(seed, 0x5eedULL));
  auto kaiming = [&](const std::string& name, nn::Shape4 shape) {
    nn::Parameter& p = params_.add(name, shape);
    const double fan_in = static_cast<double>(shape.c) * shape.h * shape.w;
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<float>(uniform_real(rng, -bound, bound));
  };
  auto bn = [&](const std::string& name, int channels) {
    params_.add(name + ".gamma", {1, channels, 1, 1}).value.fill(1.0f);
    params_.add(name + ".beta", {1, channels, 1, 1});
    running_.emplace(name, nn::RunningStats(channels));
  };
  const int w0 = config_.widths.front();
  kaiming("stem.conv.w", {w0, config_.in_channels, 3, 3});
  bn("stem.bn", w0);
  for (const BlockSpec& b : block_specs(config_)) {
    bn(b.name + ".bn1", b.in_width);
    kaiming(b.name + ".conv1.w", {b.out_width, b.in_width, 3, 3});
    bn(b.name + ".bn2", b.out_width);
    kaiming(b.name + ".conv2.w", {b.out_width, b.out_width, 3, 3});
    if (b.projection) kaiming(b.name + ".proj.w", {b.out_width, b.in_width, 1, 1});
  }
  const int wl = config_.widths.back();
  bn("head.bn", wl);
  kaiming("head.expand.w", {config_.feature_dim, wl, 1, 1});
  bn("head.bn_out", config_.feature_dim);
  const int hidden = config_.hidden_width();
  kaiming("proj.fc1.w", {hidden, config_.feature_dim, 1, 1});
  params_.add("proj.fc1.b", {1, hidden, 1, 1});
  kaiming("proj.fc2.w", {config_.projector_out, hidden, 1, 1});
  params_.add("proj.fc2.b", {1, config_.projector_out, 1, 1});
}

TaskEncoder::~TaskEncoder() = default;
TaskEncoder::TaskEncoder(TaskEncoder&&) noexcept = default;
TaskEncoder& TaskEncoder::operator=(TaskEncoder&&) noexcept = default;

void TapeDeleter::operator()(EncoderTape* t) const { delete t; }
void TapeDeleter::operator()(ProjectorTape* t) const { delete t; }

EncoderTapePtr TaskEncoder::make_encoder_tape() const { return EncoderTapePtr(new EncoderTape); }
ProjectorTapePtr TaskEncoder::make_projector_tape() const { return ProjectorTapePtr(new ProjectorTape); }

Tensor4 TaskEncoder::encode(const Tensor4& batch, Mode mode, EncoderTape* tape) {
  if (batch.c() != config_.in_channels || batch.h() != config_.input_side || batch.w() != config_.input_side) {
    throw ShapeError("encode: expected (N, " + std::to_string(config_.in_channels) + ", " +
                     std::to_string(config_.input_side) + ", " + std::to_string(config_.input_side) + "), got " +
                     batch.shape().str());
  }
  static const Tensor4 kNoBias;
  auto W = [&](const std::string& n) -> const Tensor4& { return params_.at(n).value; };
  auto bn = [&](const std::string& n, const Tensor4& x, nn::BatchNormCache* cache) {
    return nn::batchnorm_forward(x, W(n + ".gamma"), W(n + ".beta"), running_.at(n), mode, cache);
  };
  EncoderTape local;
  EncoderTape& t = tape ? *tape : local;
  const bool keep = tape != nullptr;

  if (keep) t.input = batch;
  Tensor4 x = nn::conv2d_forward(batch, W("stem.conv.w"), kNoBias, 2, 1);
  t.a0 = bn("stem.bn", x, keep ? &t.bn0 : nullptr);
  t.r0 = nn::relu_forward(t.a0);
  x = nn::maxpool2_forward(t.r0, keep ? &t.pool : nullptr);

  const auto specs = block_specs(config_);
  t.blocks.assign(specs.size(), BlockTape{});
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const BlockSpec& b = specs[i];
    BlockTape& bt = t.blocks[i];
    bt.a1 = bn(b.name + ".bn1", x, keep ? &bt.bn1 : nullptr);
    bt.h1 = nn::relu_forward(bt.a1);
    const Tensor4 shortcut = b.projection ? nn::conv2d_forward(bt.h1, W(b.name + ".proj.w"), kNoBias, b.stride, 0) : x;
    bt.c1 = nn::conv2d_forward(bt.h1, W(b.name + ".conv1.w"), kNoBias, b.stride, 1);
    bt.a2 = bn(b.name + ".bn2", bt.c1, keep ? &bt.bn2 : nullptr);
    bt.h2 = nn::relu_forward(bt.a2);
    Tensor4 y = nn::residual_add(nn::conv2d_forward(bt.h2, W(b.name + ".conv2.w"), kNoBias, 1, 1), shortcut);
    if (keep) bt.x = std::move(x);
    x = std::move(y);
  }
  t.af = bn("head.bn", x, keep ? &t.bnf : nullptr);
  t.rf = nn::relu_forward(t.af);
  const Tensor4 e = nn::conv2d_forward(t.rf, W("head.expand.w"), kNoBias, 1, 0);
  t.ae = bn("head.bn_out", e, keep ? &t.bne : nullptr);
  t.re = nn::relu_forward(t.ae);
  if (keep) t.xf = std::move(x);
  Tensor4 features = nn::global_avg_pool_forward(t.re);
  nn::check_finite(features, "encode");
  return features;
}

Tensor4 TaskEncoder::project(const Tensor4& features, ProjectorTape* tape) const {
  if (features.item_size() != static_cast<std::size_t>(config_.feature_dim)) {
    throw ShapeError("project: expected feature width " + std::to_string(config_.feature_dim) + ", got " +
                     features.shape().str());
  }
  auto W = [&](const std::string& n) -> const Tensor4& { return params_.at(n).value; };
  Tensor4 h = nn::linear_forward(features, W("proj.fc1.w"), W("proj.fc1.b"));
  Tensor4 r = nn::relu_forward(h);
  Tensor4 u = nn::linear_forward(r, W("proj.fc2.w"), W("proj.fc2.b"));
  Tensor4 z = config_.normalize_projector ? nn::l2_normalize_forward(u) : u;
  if (tape) {
    tape->features = features;
    tape->h = std::move(h);
    tape->r = std::move(r);
    tape->u = std::move(u);
    tape->z = z;
  }
  return z;
}

Tensor4 TaskEncoder::project_backward(const ProjectorTape& t, const Tensor4& dz) {
  const Tensor4 du = config_.normalize_projector ? nn::l2_normalize_backward(t.u, t.z, dz) : dz;
  nn::LinearGrads g2 = nn::linear_backward(t.r, params_.at("proj.fc2.w").value, du);
  params_.at("proj.fc2.w").accumulate(g2.dweight);
  params_.at("proj.fc2.b").accumulate(g2.dbias);
  const Tensor4 dh = nn::relu_backward(t.h, g2.dx);
  nn::LinearGrads g1 = nn::linear_backward(t.features, params_.at("proj.fc1.w").value, dh);
  params_.at("proj.fc1.w").accumulate(g1.dweight);
  params_.at("proj.fc1.b").accumulate(g1.dbias);
  return g1.dx;
}

void TaskEncoder::encode_backward(const EncoderTape& t, const Tensor4& dfeatures) {
  auto conv_back = [&](const std::string& name, const Tensor4& x, const Tensor4& dy, int stride, int pad,
                       bool need_dx = true) {
    nn::Parameter& w = params_.at(name);
    nn::ConvGrads g = nn::conv2d_backward(x, w.value, false, dy, stride, pad, need_dx);
    w.accumulate(g.dweight);
    return std::move(g.dx);
  };
  auto bn_back = [&](const std::string& name, const nn::BatchNormCache& cache, const Tensor4& dy) {
    nn::BatchNormGrads g = nn::batchnorm_backward(dy, cache, params_.at(name + ".gamma").value);
    params_.at(name + ".gamma").accumulate(g.dgamma);
    params_.at(name + ".beta").accumulate(g.dbeta);
    return std::move(g.dx);
  };

  Tensor4 d = nn::global_avg_pool_backward(dfeatures, t.re.shape());
  d = nn::relu_backward(t.ae, d);
  d = bn_back("head.bn_out", t.bne, d);
  d = conv_back("head.expand.w", t.rf, d, 1, 0);
  d = nn::relu_backward(t.af, d);
  d = bn_back("head.bn", t.bnf, d);

  const auto specs = block_specs(config_);
  for (std::size_t i = specs.size(); i-- > 0;) {
    const BlockSpec& b = specs[i];
    const BlockTape& bt = t.blocks[i];
    // d flows into both the residual branch and the shortcut.
    Tensor4 dh2 = conv_back(b.name + ".conv2.w", bt.h2, d, 1, 1);
    Tensor4 da2 = nn::relu_backward(bt.a2, dh2);
    Tensor4 dc1 = bn_back(b.name + ".bn2", bt.bn2, da2);
    Tensor4 dh1 = conv_back(b.name + ".conv1.w", bt.h1, dc1, b.stride, 1);
    Tensor4 dx;
    if (b.projection) {
      dh1 += conv_back(b.name + ".proj.w", bt.h1, d, b.stride, 0);
      dx = Tensor4(bt.x.shape());
    } else {
      dx = d;
    }
    Tensor4 da1 = nn::relu_backward(bt.a1, dh1);
    dx += bn_back(b.name + ".bn1", bt.bn1, da1);
    d = std::move(dx);
  }
  d = nn::maxpool2_backward(d, t.pool);
  d = nn::relu_backward(t.a0, d);
  d = bn_back("stem.bn", t.bn0, d);
  conv_back("stem.conv.w", t.input, d, 2, 1, /*need_dx=*/false);
}

Tensor4 stack_instance(const TaskInstance& t, int side) {
  const std::span<const TaskInstance> one(&t, 1);
  return stack_instances(one, side);
}

Tensor4 stack_instances(std::span<const TaskInstance> instances, int side) {
  Tensor4 out(static_cast<int>(instances.size()), 6, side, side);
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Image in = resize_bilinear(instances[i].input, side, side);
    const Image o = resize_bilinear(instances[i].output, side, side);
    float* dst = out.data() + i * out.item_size();
    std::copy(in.data().begin(), in.data().end(), dst);
    std::copy(o.data().begin(), o.data().end(), dst + 3 * plane);
  }
  return out;
}

Tensor4 stack_images(std::span<const Image> images, int side) {
  Tensor4 out(static_cast<int>(images.size()), 3, side, side);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image r = resize_bilinear(images[i], side, side);
    std::copy(r.data().begin(), r.data().end(), out.data() + i * out.item_size());
  }
  return out;
}

namespace {

EmbeddingRecord record_for(const TaskInstance& t) {
  EmbeddingRecord r;
  r.key = t.key;
  r.sample_id = t.source_sample_id;
  r.is_failure = t.is_failure;
  r.seen_task = task_info(t.key.task).seen;
  return r;
}

}  // namespace

std::vector<EmbeddingRecord> embed_instances(TaskEncoder& encoder, std::span<const TaskInstance> instances,
                                             int batch_size) {
  if (encoder.config().in_channels != 6) throw ShapeError("embed_instances needs a 6-channel encoder");
  std::vector<EmbeddingRecord> out;
  out.reserve(instances.size());
  const int side = encoder.config().input_side;
  const int dim = encoder.config().feature_dim;
  for (std::size_t start = 0; start < instances.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min<std::size_t>(batch_size, instances.size() - start);
    const Tensor4 features = encoder.encode(stack_instances(instances.subspan(start, count), side), Mode::kEval);
    for (std::size_t i = 0; i < count; ++i) {
      EmbeddingRecord r = record_for(instances[start + i]);
      r.vector.assign(features.data() + i * dim, features.data() + (i + 1) * dim);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<EmbeddingRecord> embed_instances_concat(TaskEncoder& encoder, std::span<const TaskInstance> instances,
                                                    int batch_size) {
  if (encoder.config().in_channels != 3) throw ShapeError("embed_instances_concat needs a 3-channel encoder");
  std::vector<EmbeddingRecord> out;
  out.reserve(instances.size());
  const int side = encoder.config().input_side;
  const int dim = encoder.config().feature_dim;
  for (std::size_t start = 0; start < instances.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min<std::size_t>(batch_size, instances.size() - start);
    std::vector<Image> ins, outs;
    for (std::size_t i = 0; i < count; ++i) {
      ins.push_back(instances[start + i].input);
      outs.push_back(instances[start + i].output);
    }
    const Tensor4 fi = encoder.encode(stack_images(ins, side), Mode::kEval);
    const Tensor4 fo = encoder.encode(stack_images(outs, side), Mode::kEval);
    for (std::size_t i = 0; i < count; ++i) {
      EmbeddingRecord r = record_for(instances[start + i]);
      r.vector.assign(fi.data() + i * dim, fi.data() + (i + 1) * dim);
      r.vector.insert(r.vector.end(), fo.data() + i * dim, fo.data() + (i + 1) * dim);
      out.push_back(std::move(r));
    }
  }
  return out;
}

void annotate_records(std::vector<EmbeddingRecord>& records, const Corpus& corpus, const SplitAssignment& split) {
  for (auto& r : records) {
    r.split = split.at(r.sample_id);
    r.seen_dataset = corpus.meta(r.key.dataset_id).seen;
  }
}

}  // namespace taco
