#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "taco/error.hpp"
#include "taco/parallel.hpp"

namespace {

using taco::cli::Args;

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--seed", a.seed, "Seed for every random choice");
  cmd->add_flag("--quiet", a.quiet, "Suppress progress output");
}

void add_checkpoint(CLI::App* cmd, Args& a) {
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  cmd->add_option("--corpus", a.corpus, "Corpus directory")->required();
  cmd->add_option("--config", a.config, "Training config whose model must match the checkpoint");
  cmd->add_option("--loss-mode", a.loss_mode, "Loss mode used to derive the expected model (with --config)");
  cmd->add_option("--tau", a.tau, "Temperature used to derive the expected model (with --config)");
}

}  // namespace

int main(int argc, char** argv) {
  taco::configure_threads();
  CLI::App app{"taco: visual task embeddings via contrastive learning"};
  app.require_subcommand(1);
  Args a;

  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic multi-dataset corpus");
  synth->add_option("--config", a.config, "Corpus generation config (JSON)")->required();
  add_common(synth, a);

  auto* train = app.add_subcommand("train", "Train a task encoder");
  train->add_option("--config", a.config, "Training config (JSON)")->required();
  train->add_option("--corpus", a.corpus, "Corpus directory")->required();
  train->add_option("--loss-mode", a.loss_mode, "taco or simclr_baseline");
  train->add_option("--tau", a.tau, "Contrastive temperature");
  add_common(train, a);

  auto* embed = app.add_subcommand("embed", "Export embeddings of one split");
  add_checkpoint(embed, a);
  embed->add_option("--split", a.split, "train, val or test");
  embed->add_option("--tasks", a.tasks, "Restrict to these tasks")->delimiter(',');
  add_common(embed, a);

  auto* eval = app.add_subcommand("eval", "kNN macro-F1 over seen/unseen scenarios");
  eval->add_option("--checkpoint", a.checkpoint, "Checkpoint file");
  eval->add_option("--corpus", a.corpus, "Corpus directory");
  eval->add_option("--config", a.config, "Training config whose model must match the checkpoint");
  eval->add_option("--k", a.ks, "Neighbor counts")->delimiter(',');
  eval->add_option("--scenario", a.scenarios, "tasks:datasets filters, e.g. seen:unseen, or all")->delimiter(',');
  eval->add_option("--granularity", a.granularities, "visual_task, task, dataset")->delimiter(',');
  eval->add_option("--baseline-embeddings", a.baseline_embeddings, "Externally produced embedding file");
  eval->add_option("--baseline-name", a.baseline_name, "Name for the baseline report");
  eval->add_option("--tasks", a.tasks, "Restrict to these tasks")->delimiter(',');
  eval->add_option("--max-reference", a.max_reference_per_dataset, "Cap on reference samples per dataset");
  add_common(eval, a);

  auto* sweep = app.add_subcommand("sweep", "Iterative task-adaptation distance sweep");
  add_checkpoint(sweep, a);
  sweep->add_option("--kind", a.kind, "brightness, rotation or noisy_segmentation");
  sweep->add_option("--probes", a.probes, "Number of probe samples");
  sweep->add_option("--tasks", a.tasks, "Reference tasks")->delimiter(',');
  add_common(sweep, a);

  auto* sim = app.add_subcommand("simmatrix", "Cosine similarity of mean task embeddings");
  add_checkpoint(sim, a);
  sim->add_option("--split", a.split, "Split to embed");
  sim->add_option("--tasks", a.tasks, "Restrict to these tasks")->delimiter(',');
  add_common(sim, a);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(taco::ExitCode::kConfig);
  }

  try {
    if (*synth) return taco::cli::cmd_synth_corpus(a);
    if (*train) return taco::cli::cmd_train(a);
    if (*embed) return taco::cli::cmd_embed(a);
    if (*eval) return taco::cli::cmd_eval(a);
    if (*sweep) return taco::cli::cmd_sweep(a);
    if (*sim) return taco::cli::cmd_simmatrix(a);
  } catch (const taco::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(taco::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(taco::ExitCode::kData);
  }
  return 0;
}
