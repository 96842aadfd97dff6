// Copyright 2026 The DexterLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dexterlab: train, evaluate and ablate pointing agents.
//
//   dexterlab train --config run.json [--resume ckpt] [--stop-after-updates N]
//   dexterlab eval --checkpoint ckpt --episodes 100 --radius-mm 1.5 --seed 0
//   dexterlab ablate --config base.json --grid grid.json

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dexterlab/config.h"
#include "dexterlab/experiment.h"
#include "dexterlab/rollout.h"

namespace {

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status.message() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dexterlab;

  CLI::App app{"Train and evaluate reinforcement-learning pointing agents."};
  app.require_subcommand(1);

  std::string config_path;
  std::string resume_path;
  int64_t stop_after = -1;
  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "Run a training job.");
  train->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  train->add_option("--resume", resume_path, "Checkpoint to resume from");
  train->add_option("--stop-after-updates", stop_after,
                    "Stop after this many updates (checkpointing first)");
  train->add_flag("--quiet", quiet, "No per-update progress lines");

  EvalCommand eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint.");
  eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--episodes", eval.episodes, "Evaluation episodes")
      ->capture_default_str();
  eval_cmd->add_option("--radius-mm", eval.radius_mm, "Target radius in mm")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed")
      ->capture_default_str();
  eval_cmd->add_option("--csv", eval.csv_path,
                       "Results table to append to (default: results.csv "
                       "next to the checkpoint)");

  std::string grid_path;
  CLI::App* ablate = app.add_subcommand("ablate", "Run an ablation grid.");
  ablate->add_option("--config", config_path, "Base experiment config (JSON)")
      ->required();
  ablate->add_option("--grid", grid_path, "Grid spec (JSON)")->required();
  ablate->add_flag("--quiet", quiet, "No per-update progress lines");

  CLI11_PARSE(app, argc, argv);

  const int threads = DefaultThreadCount();
  TrainOptions options;
  options.threads = threads;
  options.progress = quiet ? nullptr : &std::cerr;

  if (train->parsed()) {
    absl::StatusOr<ExperimentConfig> config = LoadConfigFile(config_path);
    if (!config.ok()) return Fail(config.status());
    options.resume_path = resume_path;
    if (stop_after >= 0) options.stop_after_updates = stop_after;
    absl::StatusOr<TrainingState> state = RunTraining(*config, options);
    if (!state.ok()) return Fail(state.status());
    std::cout << "trained to timestep " << state->timestep << " ("
              << state->update << " updates), checkpoint in "
              << config->output_dir << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    eval.threads = threads;
    absl::StatusOr<ResultRow> row = RunEvalCommand(eval);
    if (!row.ok()) return Fail(row.status());
    nlohmann::json out = MetricsJson(*row->metrics);
    out["button_radius_mm"] = row->button_radius_mm;
    out["seed"] = eval.seed;
    std::cout << out.dump() << "\n";
    return 0;
  }

  absl::StatusOr<ExperimentConfig> config = LoadConfigFile(config_path);
  if (!config.ok()) return Fail(config.status());
  std::ifstream grid_in(grid_path);
  if (!grid_in) return Fail(absl::NotFoundError("cannot read " + grid_path));
  std::stringstream grid_text;
  grid_text << grid_in.rdbuf();
  absl::StatusOr<AblationGrid> grid = ParseAblationGrid(grid_text.str());
  if (!grid.ok()) return Fail(grid.status());
  absl::StatusOr<std::vector<ResultRow>> rows =
      RunAblation(*config, *grid, options);
  if (!rows.ok()) return Fail(rows.status());
  std::cout << ResultHeader() << "\n";
  bool any_failed = false;
  for (const ResultRow& row : *rows) {
    std::cout << FormatResultRow(row) << "\n";
    any_failed |= row.status != "ok";
  }
  return any_failed ? 2 : 0;
}
