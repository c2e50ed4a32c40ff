#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"

#include <nlohmann/json.hpp>

using taco::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(TACO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kCorpusConfig = R"({
  "seed": 3,
  "datasets": [
    {"dataset_id": "alpha", "height": 32, "width": 32, "num_samples": 28, "grayscale": true, "num_classes": 2},
    {"dataset_id": "beta", "height": 32, "width": 32, "num_samples": 28, "grayscale": false, "num_classes": 1},
    {"dataset_id": "gamma", "height": 32, "width": 32, "num_samples": 28, "grayscale": true, "num_classes": 1,
     "seen": false}
  ]
})";

const char* kTrainConfig = R"({
  "iterations": 3, "lr": 0.01, "base_pairs": 4, "seed": 2,
  "tasks": ["identity", "rotate90", "segmentation"],
  "model": {"input_side": 32, "widths": [4, 8], "blocks_per_stage": 1, "feature_dim": 8, "projector_out": 4}
})";

// One corpus and one trained checkpoint shared by every test in the suite.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    write(*dir_ / "corpus.json", kCorpusConfig);
    write(*dir_ / "train.json", kTrainConfig);
    ASSERT_EQ(run("synth-corpus --config " + path("corpus.json") + " --out " + path("corpus") + " --seed 3"), 0);
    ASSERT_EQ(run("train --config " + path("train.json") + " --corpus " + path("corpus") + " --out " + path("run") +
                  " --quiet"),
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }
  static std::string checkpoint() { return path("run/checkpoint.bin"); }

  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, SynthCorpusIsReproducible) {
  ASSERT_EQ(run("synth-corpus --config " + path("corpus.json") + " --out " + path("corpus2") + " --seed 3"), 0);
  EXPECT_EQ(slurp(path("corpus/split.json")), slurp(path("corpus2/split.json")));
  EXPECT_TRUE(fs::exists(path("corpus/alpha/meta.json")));
  for (const auto& entry : fs::recursive_directory_iterator(path("corpus"))) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const fs::path rel = fs::relative(entry.path(), path("corpus"));
    EXPECT_EQ(slurp(entry.path()), slurp(fs::path(path("corpus2")) / rel)) << rel;
  }
  EXPECT_TRUE(fs::exists(path("corpus2/manifest.json")));
}

TEST_F(Cli, TrainingRerunGivesIdenticalMetrics) {
  ASSERT_EQ(run("train --config " + path("train.json") + " --corpus " + path("corpus") + " --out " + path("run2") +
                " --quiet"),
            0);
  const std::string a = slurp(path("run/metrics.jsonl")), b = slurp(path("run2/metrics.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(slurp(checkpoint()), slurp(path("run2/checkpoint.bin")));
  const auto manifest = nlohmann::json::parse(slurp(path("run/manifest.json")));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_TRUE(manifest.contains("code_version"));
  EXPECT_TRUE(manifest.contains("seed"));
}

TEST_F(Cli, EmbedEvalSweepSimmatrix) {
  ASSERT_EQ(run("embed --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("emb") +
                " --tasks identity,rotate90"),
            0);
  const std::string emb = slurp(path("emb/embeddings.csv"));
  EXPECT_EQ(emb.rfind("#taco-embeddings v1 dim=8", 0), 0u);

  ASSERT_EQ(run("embed --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("emb_train") +
                " --tasks identity,rotate90,segmentation --split train"),
            0);
  ASSERT_EQ(run("embed --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("emb_test") +
                " --tasks identity,rotate90,segmentation --split test"),
            0);
  const std::string train_rows = slurp(path("emb_train/embeddings.csv"));
  const std::string test_rows = slurp(path("emb_test/embeddings.csv"));
  write(path("baseline.csv"), train_rows + test_rows.substr(test_rows.find('\n') + 1));
  ASSERT_EQ(run("eval --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("eval") +
                " --tasks identity,rotate90,segmentation --k 1,3 --baseline-embeddings " + path("baseline.csv") +
                " --baseline-name same"),
            0);
  const auto report = nlohmann::json::parse(slurp(path("eval/report.json")));
  ASSERT_EQ(report["reports"].size(), 2u);
  EXPECT_EQ(report["reports"][0]["cells"].size(), 9u * 2u * 3u);
  // Re-imported native embeddings score exactly like the in-process path.
  EXPECT_EQ(report["reports"][1]["name"], "same");
  EXPECT_EQ(report["reports"][0]["cells"], report["reports"][1]["cells"]);
  EXPECT_FALSE(slurp(path("eval/report.txt")).empty());

  ASSERT_EQ(run("sweep --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("sweep") +
                " --kind brightness --probes 10"),
            0);
  const std::string csv = slurp(path("sweep/sweep_brightness.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);

  ASSERT_EQ(run("simmatrix --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("sim") +
                " --tasks identity,rotate90,invert"),
            0);
  const std::string raw = slurp(path("sim/simmatrix_raw.csv"));
  EXPECT_EQ(raw.substr(0, raw.find('\n')), "task,identity,rotate90,invert");
  EXPECT_TRUE(fs::exists(path("sim/simmatrix_normalized.csv")));
}

TEST_F(Cli, EmptySplitGivesHeaderOnlyEmbeddings) {
  // Copy the corpus with a split file that puts every sample in train.
  fs::copy(path("corpus"), path("alltrain"), fs::copy_options::recursive);
  auto split = nlohmann::json::parse(slurp(path("corpus/split.json")));
  for (auto& [id, value] : split.items()) value = "train";
  write(path("alltrain/split.json"), split.dump());
  ASSERT_EQ(run("embed --checkpoint " + checkpoint() + " --corpus " + path("alltrain") + " --out " + path("empty") +
                " --split test"),
            0);
  EXPECT_EQ(slurp(path("empty/embeddings.csv")), "#taco-embeddings v1 dim=8\n");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("train --corpus x"), 2);  // missing required option
  EXPECT_EQ(run("frobnicate"), 2);
  write(path("bad_train.json"), R"({"iterations": 3, "bogus": 1})");
  EXPECT_EQ(run("train --config " + path("bad_train.json") + " --corpus " + path("corpus") + " --out " +
                path("bad") + " --quiet"),
            2);
  EXPECT_EQ(run("train --config " + path("train.json") + " --corpus " + path("nowhere") + " --out " + path("bad") +
                " --quiet"),
            3);
  EXPECT_EQ(run("embed --checkpoint " + path("nowhere.bin") + " --corpus " + path("corpus") + " --out " +
                path("bad")),
            3);
  // The checkpoint was trained with the taco loss (6 input channels).
  EXPECT_EQ(run("embed --checkpoint " + checkpoint() + " --corpus " + path("corpus") + " --out " + path("bad") +
                " --config " + path("train.json") + " --loss-mode simclr_baseline"),
            2);
  write(path("diverge.json"), R"({
    "iterations": 5, "lr": 1e30, "base_pairs": 4, "seed": 2, "tasks": ["identity", "rotate90"],
    "model": {"input_side": 32, "widths": [4, 8], "blocks_per_stage": 1, "feature_dim": 8, "projector_out": 4}
  })");
  EXPECT_EQ(run("train --config " + path("diverge.json") + " --corpus " + path("corpus") + " --out " +
                path("diverge") + " --quiet"),
            4);
}
