#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "taco/error.hpp"
#include "taco/model.hpp"

using namespace taco;
using taco::testing::TempDir;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.input_side = 32;
  c.widths = {4, 8};
  c.blocks_per_stage = 1;
  c.feature_dim = 8;
  c.projector_out = 4;
  return c;
}

const Corpus& model_corpus() {
  static const Corpus c = generate_synthetic_corpus(taco::testing::small_corpus_spec(17, 8));
  return c;
}

std::vector<TaskInstance> instances(int count, std::uint64_t seed) {
  const Corpus& c = model_corpus();
  const TaskType tasks[] = {TaskType::kIdentity, TaskType::kRotate90, TaskType::kInvert, TaskType::kDenoising,
                            TaskType::kHorizontalFlip, TaskType::kZoomIn};
  std::vector<TaskInstance> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const std::size_t n = c.samples.size();
    const Sample& s = c.samples[i % n];
    out.push_back(synthesize_task_instance(s, c.meta(s.dataset_id), tasks[(i / n) % 6], mix_seed(seed, i)));
  }
  return out;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max<double>(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Stack, IdentityInstanceChannelsMatch) {
  const auto inst = instances(1, 1);
  const nn::Tensor4 t = stack_instance(inst[0], 32);
  ASSERT_EQ(t.shape(), (nn::Shape4{1, 6, 32, 32}));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) EXPECT_EQ(t.at(0, c, y, x), t.at(0, c + 3, y, x));
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) EXPECT_EQ(t.at(0, 1, y, x), inst[0].input.at(1, y, x));
}

TEST(Stack, ConstantResizeAndShapeErrors) {
  TaskInstance t;
  t.input = Image(200, 200, 0.3f);
  t.output = Image(200, 200, 0.7f);
  const nn::Tensor4 s = stack_instance(t, 64);
  for (int y = 0; y < 64; ++y) {
    EXPECT_NEAR(s.at(0, 0, y, y), 0.3f, 1e-6);
    EXPECT_NEAR(s.at(0, 5, y, 63 - y), 0.7f, 1e-6);
  }
  const std::vector<Image> images = {Image(10, 10, 0.2f), Image(20, 20, 0.4f)};
  EXPECT_EQ(stack_images(images, 16).shape(), (nn::Shape4{2, 3, 16, 16}));
}

TEST(Encoder, ConfigJsonRoundTripAndValidation) {
  const EncoderConfig c = tiny_config();
  EXPECT_EQ(EncoderConfig::from_json(c.to_json()), c);
  EXPECT_EQ(EncoderConfig::from_json(c.to_json()).digest(), c.digest());
  EXPECT_NE(EncoderConfig{}.digest(), c.digest());
  EXPECT_THROW(EncoderConfig::from_json(R"({"feature_dim": 8, "mystery": 1})"), ConfigError);
  EncoderConfig bad = c;
  bad.feature_dim = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Encoder, EvalModeDeterministicAndShape) {
  TaskEncoder enc(tiny_config(), 3);
  const auto inst = instances(3, 2);
  nn::Tensor4 batch = stack_instances(inst, 32);
  // Duplicate row 0 into row 2.
  std::copy(batch.item(0).begin(), batch.item(0).end(), batch.item(2).begin());
  const nn::Tensor4 f = enc.encode(batch, nn::Mode::kEval);
  ASSERT_EQ(f.shape(), (nn::Shape4{3, 8, 1, 1}));
  for (int d = 0; d < 8; ++d) EXPECT_EQ(f.at(0, d, 0, 0), f.at(2, d, 0, 0));
  EXPECT_EQ(enc.encode(batch, nn::Mode::kEval), f);
  EXPECT_THROW(enc.encode(nn::Tensor4(1, 3, 32, 32), nn::Mode::kEval), ShapeError);
  EXPECT_THROW(enc.encode(nn::Tensor4(1, 6, 16, 16), nn::Mode::kEval), ShapeError);
}

TEST(Encoder, SeedDeterminesInitialisation) {
  const TaskEncoder a(tiny_config(), 5), b(tiny_config(), 5), c(tiny_config(), 6);
  EXPECT_EQ(a.params().at("stem.conv.w").value, b.params().at("stem.conv.w").value);
  EXPECT_NE(a.params().at("stem.conv.w").value, c.params().at("stem.conv.w").value);
}

TEST(Encoder, UntrainedFeatureMatrixIsFullRank) {
  TaskEncoder enc(EncoderConfig{}, 1);
  const auto inst = instances(100, 3);
  const auto records = embed_instances(enc, inst, 50);
  Eigen::MatrixXd m(100, 128);
  for (int i = 0; i < 100; ++i)
    for (int d = 0; d < 128; ++d) m(i, d) = records[i].vector[d];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > sv(0) * 1e-6;
  EXPECT_EQ(rank, 100);
}

TEST(Projector, NormalizedRowsAndZeroLayer) {
  TaskEncoder enc(tiny_config(), 4);
  Rng rng(4);
  const nn::Tensor4 feats = oracle::random_tensor({5, 8, 1, 1}, rng);
  const nn::Tensor4 z = enc.project(feats);
  ASSERT_EQ(z.shape(), (nn::Shape4{5, 4, 1, 1}));
  for (int i = 0; i < 5; ++i) {
    double s = 0;
    for (float v : z.item(i)) s += double(v) * v;
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-5);
  }
  enc.params().at("proj.fc2.w").value.fill(0.0f);
  enc.params().at("proj.fc2.b").value.fill(0.0f);
  const nn::Tensor4 zero = enc.project(feats);
  for (float v : zero.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Projector, GradientMatchesFiniteDifferences) {
  for (bool normalize : {true, false}) {
    EncoderConfig cfg = tiny_config();
    cfg.normalize_projector = normalize;
    TaskEncoder enc(cfg, 5);
    Rng rng(5);
    nn::Tensor4 feats = oracle::random_tensor({4, 8, 1, 1}, rng);
    const nn::Tensor4 w = oracle::random_tensor({4, 4, 1, 1}, rng);
    auto tape = enc.make_projector_tape();
    enc.project(feats, tape.get());
    const nn::Tensor4 dfeat = enc.project_backward(*tape, w);
    auto f = [&] { return oracle::weighted_sum(enc.project(feats), w); };
    EXPECT_LT(oracle::check_gradient(feats, dfeat, f).relative(), 1e-3);
    for (const char* name : {"proj.fc1.w", "proj.fc1.b", "proj.fc2.w", "proj.fc2.b"}) {
      nn::Parameter& p = enc.params().at(name);
      const nn::Tensor4 analytic = p.grad;
      EXPECT_LT(oracle::check_gradient(p.value, analytic, f).relative(), 1e-3) << name;
    }
  }
}

// Directional derivative along the analytic gradient; the composite network is
// piecewise smooth, so a small step on noise input keeps kink crossings rare.
TEST(Encoder, BackwardMatchesDirectionalDerivative) {
  TaskEncoder enc(tiny_config(), 6);
  Rng rng(6);
  const nn::Tensor4 x = oracle::random_tensor({3, 6, 32, 32}, rng, 0.0, 1.0);
  const nn::Tensor4 w = oracle::random_tensor({3, 8, 1, 1}, rng);
  auto tape = enc.make_encoder_tape();
  enc.encode(x, nn::Mode::kTrain, tape.get());
  enc.encode_backward(*tape, w);
  auto f = [&] { return oracle::weighted_sum(enc.encode(x, nn::Mode::kTrain), w); };
  const double eps = 1e-4;
  for (auto& [name, p] : enc.params().entries()) {
    if (name.rfind("proj.", 0) == 0) continue;
    const nn::Tensor4 g = p.grad, base = p.value;
    double norm = 0;
    for (float v : g.values()) norm += double(v) * v;
    norm = std::sqrt(norm);
    ASSERT_GT(norm, 0.0) << name;
    for (std::size_t i = 0; i < g.size(); ++i) p.value[i] = static_cast<float>(base[i] + eps * g[i] / norm);
    const double fp = f();
    for (std::size_t i = 0; i < g.size(); ++i) p.value[i] = static_cast<float>(base[i] - eps * g[i] / norm);
    const double fm = f();
    p.value = base;
    EXPECT_NEAR((fp - fm) / (2 * eps), norm, 1e-2 * norm) << name;
  }
}

TEST(Embed, EmptyAndRepeated) {
  TaskEncoder enc(tiny_config(), 7);
  EXPECT_TRUE(embed_instances(enc, std::vector<TaskInstance>{}).empty());
  auto inst = instances(2, 7);
  inst[1] = inst[0];
  const auto r = embed_instances(enc, inst);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].vector, r[1].vector);
  EXPECT_EQ(r[0].key.label(), inst[0].key.label());
  EXPECT_EQ(r[0].sample_id, inst[0].source_sample_id);
}

TEST(Embed, BatchSizeIndependence) {
  TaskEncoder enc(tiny_config(), 8);
  const auto inst = instances(10, 8);
  const auto one = embed_instances(enc, inst, 1);
  const auto ten = embed_instances(enc, inst, 10);
  for (int i = 0; i < 10; ++i) EXPECT_LT(max_abs_diff(one[i].vector, ten[i].vector), 1e-5);
}

TEST(Embed, InvariantToProjectorWeights) {
  TaskEncoder enc(tiny_config(), 9);
  const auto inst = instances(4, 9);
  const auto before = embed_instances(enc, inst);
  for (auto& [name, p] : enc.params().entries())
    if (name.rfind("proj.", 0) == 0)
      for (float& v : p.value.values()) v += 0.5f;
  EXPECT_EQ(embed_instances(enc, inst), before);
}

TEST(Embed, SwappingInputAndOutputChangesEmbedding) {
  TaskEncoder enc(tiny_config(), 10);
  const auto inst = instances(40, 10);
  const TaskInstance& rotated = inst[33];
  ASSERT_EQ(rotated.key.task, TaskType::kRotate90);
  TaskInstance swapped = rotated;
  std::swap(swapped.input, swapped.output);
  const std::vector<TaskInstance> pair = {rotated, swapped};
  const auto r = embed_instances(enc, pair);
  EXPECT_GT(max_abs_diff(r[0].vector, r[1].vector), 0.0);
}

TEST(Embed, ConcatBaselineDimension) {
  EncoderConfig cfg = tiny_config();
  cfg.in_channels = 3;
  TaskEncoder enc(cfg, 11);
  const auto r = embed_instances_concat(enc, instances(3, 11));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].vector.size(), 16u);
  TaskEncoder six(tiny_config(), 11);
  EXPECT_THROW(embed_instances_concat(six, instances(1, 11)), ShapeError);
}

TEST(Checkpoint, RoundTripIsExact) {
  TempDir dir;
  TaskEncoder enc(tiny_config(), 12);
  const auto inst = instances(4, 12);
  // Move running statistics away from their initial values.
  enc.encode(stack_instances(inst, 32), nn::Mode::kTrain);
  const std::string path = (dir / "ck.bin").string();
  save_checkpoint(path, enc);
  TaskEncoder back = load_checkpoint(path);
  EXPECT_EQ(back.config(), enc.config());
  for (const auto& [name, p] : enc.params().entries()) EXPECT_EQ(back.params().at(name).value, p.value) << name;
  for (const auto& [name, rs] : enc.running_stats()) {
    EXPECT_EQ(back.running_stats().at(name).mean, rs.mean);
    EXPECT_EQ(back.running_stats().at(name).var, rs.var);
  }
  EXPECT_EQ(embed_instances(back, inst), embed_instances(enc, inst));
}

TEST(Checkpoint, ConfigMismatchAndCorruption) {
  TempDir dir;
  TaskEncoder enc(tiny_config(), 13);
  const std::string path = (dir / "ck.bin").string();
  save_checkpoint(path, enc);
  EncoderConfig other = tiny_config();
  other.feature_dim = 16;
  EXPECT_THROW(load_checkpoint(path, other), VersionError);
  EXPECT_NO_THROW(load_checkpoint(path, tiny_config()));
  {
    std::ofstream trunc(dir / "short.bin", std::ios::binary);
    trunc << "TACOCKPT";
  }
  EXPECT_THROW(load_checkpoint((dir / "short.bin").string()), DataError);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "NOTACHECKPOINT";
  }
  EXPECT_THROW(load_checkpoint((dir / "junk.bin").string()), DataError);
  EXPECT_THROW(load_checkpoint((dir / "missing.bin").string()), DataError);
}
