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

// The collect-then-update training loop and its complete resumable state.

#ifndef DEXTERLAB_TRAINER_H_
#define DEXTERLAB_TRAINER_H_

#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/statusor.h"
#include "dexterlab/config.h"
#include "dexterlab/curriculum.h"
#include "dexterlab/network.h"
#include "dexterlab/ppo.h"
#include "dexterlab/rollout.h"
#include "dexterlab/target_sampler.h"
#include "json.hpp"

namespace dexterlab {

struct TrainingState {
  int64_t timestep = 0;
  int64_t update = 0;
  CurriculumState curriculum;
  CellStats cells;
  PolicyParams<float> params;
  AdamState<float> adam;
  std::mt19937_64 learner_rng;
  std::vector<EnvSlot> slots;
};

NetworkShape ShapeFor(const ExperimentConfig& config);

// Fresh state derived from config.seed; every env slot starts an episode.
absl::StatusOr<TrainingState> InitialTrainingState(
    const ExperimentConfig& config);

struct CurriculumEvent {
  Stage from_stage = Stage::kTaskComplexity;
  int from_sub_stage = 0;
  Stage to_stage = Stage::kTaskComplexity;
  int to_sub_stage = 0;
  double success_rate = 0.0;
};

struct UpdateRecord {
  int64_t update = 0;    // 1-based index of this update
  int64_t timestep = 0;  // after this update's rollout
  Stage stage = Stage::kTaskComplexity;  // after curriculum bookkeeping
  int sub_stage = 0;
  double windowed_success = 0.0;
  int episodes = 0;
  int successes = 0;
  RewardTermMeans reward;
  UpdateStats ppo;
  std::vector<double> cell_ema;
  std::vector<CurriculumEvent> events;
};

nlohmann::json UpdateRecordJson(const UpdateRecord& record);
nlohmann::json CurriculumEventJson(const CurriculumEvent& event,
                                   int64_t update, int64_t timestep);

// Folds rollout outcomes into the curriculum and the sampler statistics.
// Only outcomes of episodes started in the current sub-stage count toward
// advancement, so at most one advancement happens per call. Cell statistics
// are updated from adaptively sampled targets (stage 3 onward).
std::vector<CurriculumEvent> ApplyOutcomes(
    std::span<const EpisodeOutcome> outcomes, const ExperimentConfig& config,
    CurriculumState& curriculum, CellStats& cells);

// One rollout plus one PPO update. On error the state must be discarded.
absl::StatusOr<UpdateRecord> TrainIteration(TrainingState& state,
                                            const ExperimentConfig& config,
                                            int threads);

}  // namespace dexterlab

#endif  // DEXTERLAB_TRAINER_H_
