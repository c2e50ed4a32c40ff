#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace taco::cli {

struct Args {
  std::string config;
  std::string corpus;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<int> ks = {1, 3, 5};
  std::vector<std::string> scenarios;  // "tasks:datasets"; empty means all nine
  std::vector<std::string> granularities = {"visual_task", "task", "dataset"};
  std::string baseline_embeddings;
  std::string baseline_name;
  std::string loss_mode;
  std::optional<double> tau;
  std::string split = "test";
  std::string kind = "brightness";
  int probes = 50;
  std::vector<std::string> tasks;
  int max_reference_per_dataset = -1;
  bool quiet = false;
};

int cmd_synth_corpus(const Args& args);
int cmd_train(const Args& args);
int cmd_embed(const Args& args);
int cmd_eval(const Args& args);
int cmd_sweep(const Args& args);
int cmd_simmatrix(const Args& args);

}  // namespace taco::cli
