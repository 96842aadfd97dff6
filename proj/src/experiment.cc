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

#include "dexterlab/experiment.h"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dexterlab/checkpoint.h"

namespace dexterlab {

namespace fs = std::filesystem;
using nlohmann::json;

absl::StatusOr<DirectoryLock> DirectoryLock::Acquire(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  const std::string path = (fs::path(dir) / ".lock").string();
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    return absl::AlreadyExistsError(absl::StrCat(
        dir, " is locked by another run (remove ", path, " if it is stale)"));
  }
  const std::string pid = absl::StrCat(::getpid(), "\n");
  [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  return DirectoryLock(path);
}

DirectoryLock::DirectoryLock(DirectoryLock&& other) noexcept
    : path_(std::move(other.path_)) {
  other.path_.clear();
}

DirectoryLock::~DirectoryLock() {
  if (!path_.empty()) ::unlink(path_.c_str());
}

std::string PeriodicCheckpointName(int64_t update) {
  return absl::StrFormat("checkpoint_u%06d.ckpt", update);
}

namespace {

absl::Status WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

// Keeps log lines up to and including `last_update`, so a resumed run
// continues the log where its checkpoint left off.
absl::Status TruncateLog(const fs::path& path, int64_t last_update) {
  std::ifstream in(path);
  if (!in) return absl::OkStatus();
  std::string kept;
  std::string line;
  while (std::getline(in, line)) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("update")) break;
    if (j["update"].get<int64_t>() > last_update) break;
    absl::StrAppend(&kept, line, "\n");
  }
  in.close();
  return WriteFile(path, kept);
}

void WriteNanDump(const fs::path& path, const TrainingState& state,
                  const absl::Status& error) {
  const auto& flat = state.params.flat();
  int64_t non_finite = 0;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (!std::isfinite(flat(i))) ++non_finite;
  }
  const json dump = {
      {"error", std::string(error.message())},
      {"update", state.update + 1},
      {"timestep", state.timestep},
      {"stage", StageName(state.curriculum.stage())},
      {"sub_stage", state.curriculum.sub_stage()},
      {"non_finite_parameters", non_finite},
  };
  WriteFile(path, dump.dump(2) + "\n").IgnoreError();
}

std::string CsvField(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out + "\"";
}

std::string YesNo(bool b) { return b ? "yes" : "no"; }

}  // namespace

absl::StatusOr<TrainingState> RunTraining(const ExperimentConfig& config,
                                          const TrainOptions& options) {
  absl::StatusOr<DirectoryLock> lock = DirectoryLock::Acquire(config.output_dir);
  if (!lock.ok()) return lock.status();
  const fs::path dir(config.output_dir);
  if (absl::Status s = WriteFile(dir / "config.json", SerializeConfig(config));
      !s.ok()) {
    return s;
  }

  const fs::path log_path = dir / kTrainLogName;
  TrainingState state;
  if (!options.resume_path.empty()) {
    absl::StatusOr<Checkpoint> ck = LoadCheckpoint(options.resume_path);
    if (!ck.ok()) return ck.status();
    if (absl::Status s = CheckResumeCompatible(*ck, config); !s.ok()) return s;
    state = std::move(ck->state);
    if (absl::Status s = TruncateLog(log_path, state.update); !s.ok()) return s;
  } else {
    absl::StatusOr<TrainingState> fresh = InitialTrainingState(config);
    if (!fresh.ok()) return fresh.status();
    state = *std::move(fresh);
    if (absl::Status s = WriteFile(log_path, ""); !s.ok()) return s;
  }

  std::ofstream log(log_path, std::ios::app);
  if (!log) return absl::UnavailableError("cannot open the training log");
  int64_t updates_here = 0;
  while (state.timestep < config.total_timesteps) {
    if (options.stop_after_updates && updates_here >= *options.stop_after_updates) {
      break;
    }
    absl::StatusOr<UpdateRecord> record =
        TrainIteration(state, config, options.threads);
    if (!record.ok()) {
      if (record.status().code() == absl::StatusCode::kInternal) {
        WriteNanDump(dir / kNanDumpName, state, record.status());
      }
      return record.status();
    }
    log << UpdateRecordJson(*record).dump() << "\n";
    for (const CurriculumEvent& e : record->events) {
      log << CurriculumEventJson(e, record->update, record->timestep).dump()
          << "\n";
    }
    log.flush();
    ++updates_here;
    if (state.update % config.checkpoint_every == 0) {
      absl::Status s = SaveCheckpoint(
          (dir / PeriodicCheckpointName(state.update)).string(), config, state);
      if (!s.ok()) return s;
    }
    if (options.progress != nullptr) {
      *options.progress << absl::StrFormat(
          "update %d  t=%d  %s/%d  success=%.3f  reward=%.4f  lr=%.3g\n",
          record->update, record->timestep, StageName(record->stage),
          record->sub_stage, record->windowed_success, record->reward.total,
          record->ppo.learning_rate);
      for (const CurriculumEvent& e : record->events) {
        *options.progress << "  curriculum -> " << StageName(e.to_stage) << "/"
                          << e.to_sub_stage << "\n";
      }
      options.progress->flush();
    }
  }
  absl::Status s = SaveCheckpoint((dir / kLatestCheckpointName).string(),
                                  config, state);
  if (!s.ok()) return s;
  return state;
}

const std::vector<std::string>& ResultColumns() {
  static const std::vector<std::string> kColumns = {
      "network_size",
      "max_timesteps",
      "action_masking",
      "curriculum_learning",
      "stage2_dynamic_reward",
      "stage2_early_reward",
      "button_radius_mm",
      "success_rate",
      "avg_errors_per_success_episode",
      "avg_time_per_success_episode",
      "status",
  };
  return kColumns;
}

std::string ResultHeader() { return absl::StrJoin(ResultColumns(), ","); }

ResultRow MakeResultRow(const ExperimentConfig& config, double radius_mm) {
  ResultRow row;
  row.network_size = config.ppo.hidden;
  row.max_timesteps = config.total_timesteps;
  row.action_masking = config.mask_enabled;
  row.curriculum_learning = config.curriculum_enabled;
  // Without the curriculum there is no stage 2, so neither reward column
  // applies; early mode still means penalties from the first step.
  row.stage2_dynamic_reward =
      config.curriculum_enabled &&
      config.curriculum.reward_mode == RewardMode::kDynamic;
  row.stage2_early_reward = config.curriculum.reward_mode == RewardMode::kEarly;
  row.button_radius_mm = radius_mm;
  return row;
}

std::string FormatResultRow(const ResultRow& row) {
  std::vector<std::string> f;
  f.push_back(absl::StrCat(row.network_size, "x", row.network_size));
  f.push_back(absl::StrCat(row.max_timesteps));
  f.push_back(YesNo(row.action_masking));
  f.push_back(YesNo(row.curriculum_learning));
  f.push_back(YesNo(row.stage2_dynamic_reward));
  f.push_back(YesNo(row.stage2_early_reward));
  f.push_back(absl::StrFormat("%g", row.button_radius_mm));
  if (row.metrics) {
    const EvalMetrics& m = *row.metrics;
    f.push_back(absl::StrFormat("%.4f", m.success_rate));
    f.push_back(m.avg_errors_per_success
                    ? absl::StrFormat("%.4f", *m.avg_errors_per_success)
                    : "");
    f.push_back(m.avg_time_per_success
                    ? absl::StrFormat("%.4f", *m.avg_time_per_success)
                    : "");
  } else {
    f.insert(f.end(), 3, "");
  }
  f.push_back(CsvField(row.status));
  return absl::StrJoin(f, ",");
}

json MetricsJson(const EvalMetrics& m) {
  json j = {{"episodes", m.episodes}, {"success_rate", m.success_rate}};
  j["avg_errors_per_success_episode"] =
      m.avg_errors_per_success ? json(*m.avg_errors_per_success) : json();
  j["avg_time_per_success_episode"] =
      m.avg_time_per_success ? json(*m.avg_time_per_success) : json();
  return j;
}

absl::Status AppendResultRow(const std::string& csv_path, const ResultRow& row) {
  std::error_code ec;
  const bool fresh =
      !fs::exists(csv_path, ec) || fs::file_size(csv_path, ec) == 0;
  std::ofstream out(csv_path, std::ios::app);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", csv_path));
  if (fresh) out << ResultHeader() << "\n";
  out << FormatResultRow(row) << "\n";
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", csv_path));
  return absl::OkStatus();
}

absl::StatusOr<ResultRow> RunEvalCommand(const EvalCommand& command) {
  if (command.episodes < 1) {
    return absl::InvalidArgumentError("--episodes must be >= 1");
  }
  if (!(command.radius_mm > 0.0)) {
    return absl::InvalidArgumentError("--radius-mm must be positive");
  }
  absl::StatusOr<Checkpoint> ck = LoadCheckpoint(command.checkpoint_path);
  if (!ck.ok()) return ck.status();
  const double radius = command.radius_mm / 1000.0;
  if (2.0 * radius > ck->config.arm.surface.Length()) {
    return absl::InvalidArgumentError("--radius-mm does not fit on the surface");
  }
  const EnvContext ctx = ck->config.MakeEnvContext();
  const NetworkPolicy policy(ck->state.params, ctx.mask, /*deterministic=*/true);
  EvalOptions options;
  options.episodes = command.episodes;
  options.radius = radius;
  options.seed = command.seed;
  absl::StatusOr<EvalMetrics> metrics =
      Evaluate(policy, ctx, options, command.threads);
  if (!metrics.ok()) return metrics.status();

  ResultRow row = MakeResultRow(ck->config, command.radius_mm);
  row.metrics = *metrics;
  const std::string csv =
      command.csv_path.empty()
          ? (fs::path(command.checkpoint_path).parent_path() / "results.csv")
                .string()
          : command.csv_path;
  if (absl::Status s = AppendResultRow(csv, row); !s.ok()) return s;
  return row;
}

absl::StatusOr<AblationGrid> ParseAblationGrid(const std::string& text) {
  const json j = json::parse(text, nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("grid spec must be a JSON object");
  }
  AblationGrid grid;
  auto list = [&](const std::string& key) -> absl::StatusOr<const json*> {
    const json& v = j[key];
    if (!v.is_array()) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid key '", key, "' must be an array"));
    }
    return &v;
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    auto bad = [&](const char* what) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid key '", key, "': ", what));
    };
    if (key == "eval_episodes") {
      if (!v.is_number_integer() || v.get<int>() < 1) {
        return bad("expected a positive integer");
      }
      grid.eval_episodes = v.get<int>();
      continue;
    }
    if (key != "network_size" && key != "mask_enabled" &&
        key != "curriculum_enabled" && key != "reward_mode" &&
        key != "radius_mm") {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown grid key '", key, "'"));
    }
    absl::StatusOr<const json*> arr = list(key);
    if (!arr.ok()) return arr.status();
    for (const json& e : **arr) {
      if (key == "network_size") {
        if (!e.is_number_integer()) return bad("expected integers");
        grid.network_size.push_back(e.get<int>());
      } else if (key == "mask_enabled") {
        if (!e.is_boolean()) return bad("expected booleans");
        grid.mask_enabled.push_back(e.get<bool>());
      } else if (key == "curriculum_enabled") {
        if (!e.is_boolean()) return bad("expected booleans");
        grid.curriculum_enabled.push_back(e.get<bool>());
      } else if (key == "reward_mode") {
        if (!e.is_string()) return bad("expected strings");
        absl::StatusOr<RewardMode> mode =
            RewardModeFromName(e.get<std::string>());
        if (!mode.ok()) return bad("expected \"dynamic\" or \"early\"");
        grid.reward_mode.push_back(*mode);
      } else {
        if (!e.is_number() || !(e.get<double>() > 0.0)) {
          return bad("expected positive numbers");
        }
        grid.radius_mm.push_back(e.get<double>());
      }
    }
  }
  return grid;
}

std::vector<AblationRun> ExpandAblationGrid(const ExperimentConfig& base,
                                            const AblationGrid& grid) {
  auto or_base = []<typename T>(const std::vector<T>& axis, T value) {
    return axis.empty() ? std::vector<T>{value} : axis;
  };
  const std::vector<int> sizes = or_base(grid.network_size, base.ppo.hidden);
  const std::vector<bool> masks = or_base(grid.mask_enabled, base.mask_enabled);
  const std::vector<bool> currics =
      or_base(grid.curriculum_enabled, base.curriculum_enabled);
  const std::vector<RewardMode> modes =
      or_base(grid.reward_mode, base.curriculum.reward_mode);
  const std::vector<double> radii = or_base(grid.radius_mm, 1.5);

  std::vector<AblationRun> runs;
  for (int size : sizes) {
    for (bool mask : masks) {
      for (bool curric : currics) {
        for (RewardMode mode : modes) {
          const int i = static_cast<int>(runs.size());
          AblationRun run{base, radii};
          run.config.ppo.hidden = size;
          run.config.mask_enabled = mask;
          run.config.curriculum_enabled = curric;
          run.config.curriculum.reward_mode = mode;
          run.config.seed = base.seed + static_cast<uint64_t>(i);
          run.config.output_dir =
              (fs::path(base.output_dir) / absl::StrCat("run_", i)).string();
          runs.push_back(std::move(run));
        }
      }
    }
  }
  return runs;
}

absl::StatusOr<std::vector<ResultRow>> RunAblation(
    const ExperimentConfig& base, const AblationGrid& grid,
    const TrainOptions& options) {
  absl::StatusOr<DirectoryLock> lock = DirectoryLock::Acquire(base.output_dir);
  if (!lock.ok()) return lock.status();
  const std::string csv =
      (fs::path(base.output_dir) / "ablation.csv").string();
  if (absl::Status s = WriteFile(csv, ResultHeader() + "\n"); !s.ok()) return s;

  std::vector<ResultRow> rows;
  for (const AblationRun& run : ExpandAblationGrid(base, grid)) {
    absl::StatusOr<TrainingState> state;
    if (absl::Status s = run.config.Validate(); !s.ok()) {
      state = s;
    } else {
      state = RunTraining(run.config, options);
    }
    const EnvContext ctx = run.config.MakeEnvContext();
    for (double radius_mm : run.radii_mm) {
      ResultRow row = MakeResultRow(run.config, radius_mm);
      if (!state.ok()) {
        row.status = absl::StrCat("failed: ", state.status().message());
      } else {
        const NetworkPolicy policy(state->params, ctx.mask,
                                   /*deterministic=*/true);
        EvalOptions eval;
        eval.episodes = grid.eval_episodes;
        eval.radius = radius_mm / 1000.0;
        eval.seed = run.config.seed;
        absl::StatusOr<EvalMetrics> metrics =
            Evaluate(policy, ctx, eval, options.threads);
        if (metrics.ok()) {
          row.metrics = *metrics;
        } else {
          row.status = absl::StrCat("failed: ", metrics.status().message());
        }
      }
      if (absl::Status s = AppendResultRow(csv, row); !s.ok()) return s;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace dexterlab
