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

// Command drivers behind the `dexterlab` tool: training runs with logs and
// checkpoints, checkpoint evaluation, and ablation grids.

#ifndef DEXTERLAB_EXPERIMENT_H_
#define DEXTERLAB_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dexterlab/config.h"
#include "dexterlab/rollout.h"
#include "dexterlab/trainer.h"

namespace dexterlab {

// Exclusive ownership of a run directory via an O_EXCL lock file.
class DirectoryLock {
 public:
  static absl::StatusOr<DirectoryLock> Acquire(const std::string& dir);
  DirectoryLock(DirectoryLock&& other) noexcept;
  DirectoryLock& operator=(DirectoryLock&&) = delete;
  ~DirectoryLock();

 private:
  explicit DirectoryLock(std::string path) : path_(std::move(path)) {}
  std::string path_;
};

inline constexpr char kTrainLogName[] = "train_log.jsonl";
inline constexpr char kLatestCheckpointName[] = "latest.ckpt";
inline constexpr char kNanDumpName[] = "nan_dump.json";

std::string PeriodicCheckpointName(int64_t update);

struct TrainOptions {
  std::string resume_path;  // empty: fresh start
  // Stop (with a final checkpoint) after this many updates in this process.
  std::optional<int64_t> stop_after_updates;
  int threads = 1;
  std::ostream* progress = nullptr;  // one human-readable line per update
};

// Runs the training loop in config.output_dir. Returns the final state.
absl::StatusOr<TrainingState> RunTraining(const ExperimentConfig& config,
                                          const TrainOptions& options);

// Results table columns, in order.
const std::vector<std::string>& ResultColumns();

struct ResultRow {
  int network_size = 256;
  int64_t max_timesteps = 0;
  bool action_masking = true;
  bool curriculum_learning = true;
  bool stage2_dynamic_reward = true;
  bool stage2_early_reward = false;
  double button_radius_mm = 1.5;
  std::optional<EvalMetrics> metrics;  // absent for failed runs
  std::string status = "ok";
};

ResultRow MakeResultRow(const ExperimentConfig& config, double radius_mm);
std::string FormatResultRow(const ResultRow& row);
std::string ResultHeader();
nlohmann::json MetricsJson(const EvalMetrics& metrics);

// Appends one row to `csv_path`, writing the header first if the file is new
// or empty.
absl::Status AppendResultRow(const std::string& csv_path, const ResultRow& row);

struct EvalCommand {
  std::string checkpoint_path;
  int episodes = 100;
  double radius_mm = 1.5;
  uint64_t seed = 0;
  std::string csv_path;  // empty: results.csv next to the checkpoint
  int threads = 1;
};

absl::StatusOr<ResultRow> RunEvalCommand(const EvalCommand& command);

struct AblationGrid {
  std::vector<int> network_size;
  std::vector<bool> mask_enabled;
  std::vector<bool> curriculum_enabled;
  std::vector<RewardMode> reward_mode;
  std::vector<double> radius_mm;
  int eval_episodes = 100;
};

absl::StatusOr<AblationGrid> ParseAblationGrid(const std::string& text);

struct AblationRun {
  ExperimentConfig config;  // seed and output_dir already derived
  std::vector<double> radii_mm;
};

// Expands the grid over `base`; an axis left empty keeps the base value.
// Run i gets seed base.seed + i and output_dir base.output_dir/run_<i>.
std::vector<AblationRun> ExpandAblationGrid(const ExperimentConfig& base,
                                            const AblationGrid& grid);

// Trains and evaluates every combination sequentially, writing
// base.output_dir/ablation.csv. Failed runs become failed rows. Returns the
// rows; the status is an error only if the table itself cannot be written.
absl::StatusOr<std::vector<ResultRow>> RunAblation(
    const ExperimentConfig& base, const AblationGrid& grid,
    const TrainOptions& options);

}  // namespace dexterlab

#endif  // DEXTERLAB_EXPERIMENT_H_
