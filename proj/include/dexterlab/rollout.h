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

// Vectorized rollout collection and the evaluation harness.

#ifndef DEXTERLAB_ROLLOUT_H_
#define DEXTERLAB_ROLLOUT_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dexterlab/arm_env.h"
#include "dexterlab/curriculum.h"
#include "dexterlab/masking.h"
#include "dexterlab/network.h"
#include "dexterlab/ppo.h"
#include "dexterlab/reward.h"
#include "dexterlab/target_sampler.h"

namespace dexterlab {

struct RolloutConfig {
  int num_envs = 16;
  int horizon = 2048;
  int frameskip = 3;
  double episode_limit = 10.0;

  absl::Status Validate() const;
  StepParams step_params() const { return {frameskip, episode_limit}; }
};

// Maps an observation to an action and a value estimate. Implementations
// must be safe to call concurrently from several threads.
class Policy {
 public:
  virtual ~Policy() = default;
  // `rng` is the calling environment's private stream.
  virtual ActionSample Act(const Observation& obs, std::mt19937_64& rng) const = 0;
  virtual double Value(const Observation& obs) const = 0;
};

// Gaussian MLP policy over a parameter snapshot.
class NetworkPolicy : public Policy {
 public:
  NetworkPolicy(const PolicyParams<float>& params, ActionMask mask,
                bool deterministic);
  ActionSample Act(const Observation& obs, std::mt19937_64& rng) const override;
  double Value(const Observation& obs) const override;

 private:
  const PolicyParams<float>& params_;
  ActionMask mask_;
  bool deterministic_;
  std::vector<double> log_std_;
};

// Everything the rollout needs from the curriculum, frozen for one rollout.
struct TaskSettings {
  Stage stage = Stage::kTaskComplexity;
  int sub_stage = 0;
  double extrusion = 0.0;
  RewardWeights weights;
  bool fixed_start = false;

  static TaskSettings From(const CurriculumState& state,
                           const CurriculumConfig& config);
};

// One environment instance plus the bookkeeping of its current episode.
struct EnvSlot {
  ArmState state;
  Target target;
  std::mt19937_64 rng;
  ChannelVector prev_action{};
  bool first_step = true;
  int errors = 0;  // wrong presses during the current target attempt
  Stage stage = Stage::kTaskComplexity;  // task the episode was started in
  int sub_stage = 0;
  double attempt_start = 0.0;
};

struct EpisodeOutcome {
  int env = 0;
  bool success = false;
  double duration = 0.0;  // seconds from attempt start to its end
  int errors = 0;
  Stage stage = Stage::kTaskComplexity;
  int sub_stage = 0;
  Target target;
  Termination termination = Termination::kRunning;
};

struct RewardTermMeans {
  double progress = 0.0;
  double touch = 0.0;
  double jerk = 0.0;
  double effort = 0.0;
  double total = 0.0;
};

struct RolloutResult {
  RolloutBatch batch;
  std::vector<EpisodeOutcome> outcomes;  // in env-index, then time order
  RewardTermMeans reward_means;
};

// Environment context shared by all slots.
struct EnvContext {
  ArmConfig arm;
  RolloutConfig rollout;
  SamplerConfig sampler;
  ActionMask mask;
};

// Creates num_envs slots with independent random streams derived from
// `seed`; slot e depends only on (seed, e).
std::vector<EnvSlot> MakeEnvSlots(uint64_t seed, int num_envs);

// Starts a fresh episode in `slot`.
absl::Status ResetSlot(EnvSlot& slot, const EnvContext& ctx,
                       const TaskSettings& task, const CellStats& cells);

// Advances every slot by ctx.rollout.horizon control steps. Slots must have
// been reset once. Uses up to `threads` worker threads; results do not
// depend on the thread count.
absl::StatusOr<RolloutResult> CollectRollout(const Policy& policy,
                                             std::vector<EnvSlot>& slots,
                                             const EnvContext& ctx,
                                             const TaskSettings& task,
                                             const CellStats& cells,
                                             int threads = 1);

struct EpisodeLog {
  bool success = false;
  double success_time = 0.0;  // first success, seconds
  int errors = 0;
};

struct EvalMetrics {
  int episodes = 0;
  double success_rate = 0.0;
  // Absent when no episode succeeded.
  std::optional<double> avg_errors_per_success;
  std::optional<double> avg_time_per_success;
};

EvalMetrics ComputeMetrics(std::span<const EpisodeLog> logs);

struct EvalOptions {
  int episodes = 100;
  double radius = 0.0015;
  uint64_t seed = 0;
};

// Plays `options.episodes` episodes with the policy as given (use a
// deterministic NetworkPolicy for evaluation). Each episode ends at its first
// success, at the time limit, or on leaving the workspace.
absl::StatusOr<std::vector<EpisodeLog>> RunEvalEpisodes(
    const Policy& policy, const EnvContext& ctx, const EvalOptions& options,
    int threads = 1);

absl::StatusOr<EvalMetrics> Evaluate(const Policy& policy,
                                     const EnvContext& ctx,
                                     const EvalOptions& options,
                                     int threads = 1);

// Worker thread cap from DEXTERLAB_THREADS, else hardware concurrency.
int DefaultThreadCount();

}  // namespace dexterlab

#endif  // DEXTERLAB_ROLLOUT_H_
