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

#include "dexterlab/trainer.h"

#include <utility>

namespace dexterlab {

using nlohmann::json;

namespace {

std::mt19937_64 DerivedRng(uint64_t seed, uint32_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace

NetworkShape ShapeFor(const ExperimentConfig& config) {
  return NetworkShape{kObservationDim, config.ppo.hidden, kNumChannels};
}

absl::StatusOr<TrainingState> InitialTrainingState(
    const ExperimentConfig& config) {
  TrainingState s;
  s.curriculum = CurriculumState::Initial(config.curriculum_enabled);
  s.cells = CellStats::Create(config.sampler.num_cells);
  std::mt19937_64 init_rng = DerivedRng(config.seed, 1);
  s.params = PolicyParams<float>::Initialize(ShapeFor(config), init_rng,
                                             config.ppo.init_log_std);
  s.adam = AdamState<float>::Zeros(static_cast<int>(s.params.flat().size()));
  s.learner_rng = DerivedRng(config.seed, 2);
  s.slots = MakeEnvSlots(config.seed, config.rollout.num_envs);
  const EnvContext ctx = config.MakeEnvContext();
  const TaskSettings task = TaskSettings::From(s.curriculum, config.curriculum);
  for (EnvSlot& slot : s.slots) {
    if (absl::Status st = ResetSlot(slot, ctx, task, s.cells); !st.ok()) {
      return st;
    }
  }
  return s;
}

json UpdateRecordJson(const UpdateRecord& r) {
  return {
      {"type", "update"},
      {"update", r.update},
      {"timestep", r.timestep},
      {"stage", StageName(r.stage)},
      {"sub_stage", r.sub_stage},
      {"windowed_success", r.windowed_success},
      {"episodes", r.episodes},
      {"successes", r.successes},
      {"reward",
       {{"progress", r.reward.progress},
        {"touch", r.reward.touch},
        {"jerk", r.reward.jerk},
        {"effort", r.reward.effort},
        {"total", r.reward.total}}},
      {"lr", r.ppo.learning_rate},
      {"clip", r.ppo.clip_range},
      {"policy_loss", r.ppo.policy_loss},
      {"value_loss", r.ppo.value_loss},
      {"entropy", r.ppo.entropy},
      {"approx_kl", r.ppo.approx_kl},
      {"clip_fraction", r.ppo.clip_fraction},
      {"grad_norm", r.ppo.grad_norm},
      {"cell_ema", r.cell_ema},
  };
}

json CurriculumEventJson(const CurriculumEvent& e, int64_t update,
                         int64_t timestep) {
  return {
      {"type", "curriculum_advance"},
      {"update", update},
      {"timestep", timestep},
      {"from_stage", StageName(e.from_stage)},
      {"from_sub_stage", e.from_sub_stage},
      {"to_stage", StageName(e.to_stage)},
      {"to_sub_stage", e.to_sub_stage},
      {"success_rate", e.success_rate},
  };
}

std::vector<CurriculumEvent> ApplyOutcomes(
    std::span<const EpisodeOutcome> outcomes, const ExperimentConfig& config,
    CurriculumState& curriculum, CellStats& cells) {
  std::vector<CurriculumEvent> events;
  const double length = config.arm.surface.Length();
  for (const EpisodeOutcome& o : outcomes) {
    if (o.stage >= Stage::kAdaptiveSampling) {
      UpdateCell(cells, CellIndexOf(o.target.center_s, length, cells.num_cells()),
                 o.success, config.sampler.ema_decay);
    }
    if (o.stage != curriculum.stage() ||
        o.sub_stage != curriculum.sub_stage()) {
      continue;
    }
    curriculum.RecordEpisode(o.success, config.curriculum);
    if (!config.curriculum_enabled) continue;
    CurriculumEvent e;
    e.from_stage = curriculum.stage();
    e.from_sub_stage = curriculum.sub_stage();
    e.success_rate = curriculum.WindowedSuccessRate();
    if (curriculum.TryAdvance(config.curriculum)) {
      e.to_stage = curriculum.stage();
      e.to_sub_stage = curriculum.sub_stage();
      events.push_back(e);
    }
  }
  return events;
}

absl::StatusOr<UpdateRecord> TrainIteration(TrainingState& state,
                                            const ExperimentConfig& config,
                                            int threads) {
  const EnvContext ctx = config.MakeEnvContext();
  const TaskSettings task =
      TaskSettings::From(state.curriculum, config.curriculum);
  const NetworkPolicy policy(state.params, ctx.mask, /*deterministic=*/false);
  absl::StatusOr<RolloutResult> rollout =
      CollectRollout(policy, state.slots, ctx, task, state.cells, threads);
  if (!rollout.ok()) return rollout.status();

  UpdateRecord record;
  record.update = state.update + 1;
  record.reward = rollout->reward_means;
  for (const EpisodeOutcome& o : rollout->outcomes) {
    ++record.episodes;
    if (o.success) ++record.successes;
  }

  RolloutBatch& batch = rollout->batch;
  ComputeGae(batch, config.ppo.gamma, config.ppo.gae_lambda);
  absl::StatusOr<UpdateStats> stats =
      PpoUpdate(state.params, state.adam, batch, config.ppo, ctx.mask,
                state.timestep, config.total_timesteps, state.learner_rng);
  if (!stats.ok()) return stats.status();
  record.ppo = *stats;

  record.events =
      ApplyOutcomes(rollout->outcomes, config, state.curriculum, state.cells);
  state.timestep += batch.size();
  state.update += 1;

  record.timestep = state.timestep;
  record.stage = state.curriculum.stage();
  record.sub_stage = state.curriculum.sub_stage();
  record.windowed_success = state.curriculum.WindowedSuccessRate();
  record.cell_ema = state.cells.ema_success;
  return record;
}

}  // namespace dexterlab
