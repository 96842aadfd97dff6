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

#include "dexterlab/rollout.h"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"

namespace dexterlab {

absl::Status RolloutConfig::Validate() const {
  if (num_envs < 1 || horizon < 1) {
    return absl::InvalidArgumentError(
        "rollout.num_envs and rollout.horizon must be >= 1");
  }
  if (frameskip < 1) {
    return absl::InvalidArgumentError("rollout.frameskip must be >= 1");
  }
  if (!(episode_limit > 0.0)) {
    return absl::InvalidArgumentError("rollout.episode_limit must be > 0");
  }
  return absl::OkStatus();
}

NetworkPolicy::NetworkPolicy(const PolicyParams<float>& params,
                             ActionMask mask, bool deterministic)
    : params_(params), mask_(std::move(mask)), deterministic_(deterministic) {
  const auto ls = params_.tensor(kLogStd);
  log_std_.assign(ls.data(), ls.data() + ls.size());
}

namespace {

Eigen::MatrixXf ToColumn(const Observation& obs) {
  Eigen::MatrixXf x(kObservationDim, 1);
  for (int i = 0; i < kObservationDim; ++i) x(i, 0) = static_cast<float>(obs[i]);
  return x;
}

}  // namespace

ActionSample NetworkPolicy::Act(const Observation& obs,
                                std::mt19937_64& rng) const {
  const Eigen::MatrixXf mean_f = PolicyForward(params_, ToColumn(obs));
  std::vector<double> mean(mean_f.data(), mean_f.data() + mean_f.size());
  return SampleAction(mean, log_std_, mask_, rng, deterministic_);
}

double NetworkPolicy::Value(const Observation& obs) const {
  return static_cast<double>(ValueForward(params_, ToColumn(obs))(0, 0));
}

TaskSettings TaskSettings::From(const CurriculumState& state,
                                const CurriculumConfig& config) {
  TaskSettings t;
  t.stage = state.stage();
  t.sub_stage = state.sub_stage();
  t.extrusion = TargetExtrusion(state, config);
  t.weights = CurrentRewardWeights(state, config);
  t.fixed_start =
      config.fixed_start_stage1 && state.stage() == Stage::kTaskComplexity;
  return t;
}

std::vector<EnvSlot> MakeEnvSlots(uint64_t seed, int num_envs) {
  std::vector<EnvSlot> slots(num_envs);
  for (int e = 0; e < num_envs; ++e) {
    std::seed_seq seq{static_cast<uint32_t>(seed),
                      static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(e), 0x5eedu};
    slots[e].rng.seed(seq);
  }
  return slots;
}

absl::Status ResetSlot(EnvSlot& slot, const EnvContext& ctx,
                       const TaskSettings& task, const CellStats& cells) {
  ArmConfig arm = ctx.arm;
  if (task.fixed_start) {
    for (Interval& r : arm.init_range) r.lo = r.hi = 0.5 * (r.lo + r.hi);
  }
  absl::StatusOr<ArmState> state = InitState(slot.rng, arm);
  if (!state.ok()) return state.status();
  slot.state = *state;
  const Surface& surface = ctx.arm.surface;
  const double tip_s =
      surface.ArclengthOf(ForwardKinematics(slot.state.q, ctx.arm));
  slot.target = SampleTarget(cells, task.stage, slot.rng, tip_s, ctx.sampler,
                             task.extrusion, surface.Length());
  slot.prev_action.fill(0.0);
  slot.first_step = true;
  slot.errors = 0;
  slot.stage = task.stage;
  slot.sub_stage = task.sub_stage;
  slot.attempt_start = 0.0;
  return absl::OkStatus();
}

namespace {

struct SlotResult {
  absl::Status status;
  std::vector<EpisodeOutcome> outcomes;
  RewardTermMeans sums;
};

EpisodeOutcome MakeOutcome(int env, const EnvSlot& slot, bool success,
                           double end_time, Termination termination) {
  EpisodeOutcome o;
  o.env = env;
  o.success = success;
  o.duration = end_time - slot.attempt_start;
  o.errors = slot.errors;
  o.stage = slot.stage;
  o.sub_stage = slot.sub_stage;
  o.target = slot.target;
  o.termination = termination;
  return o;
}

void RunSlot(int e, const Policy& policy, EnvSlot& slot, const EnvContext& ctx,
             const TaskSettings& task, const CellStats& cells,
             RolloutBatch& batch, SlotResult& result) {
  const int horizon = ctx.rollout.horizon;
  const StepParams sp = ctx.rollout.step_params();
  const Surface& surface = ctx.arm.surface;

  for (int t = 0; t < horizon; ++t) {
    const int i = e * horizon + t;
    const Observation obs = Observe(slot.state, slot.target, sp, ctx.arm);
    const ActionSample sample = policy.Act(obs, slot.rng);
    const double value = policy.Value(obs);

    ChannelVector command;
    std::copy(sample.env_action.begin(), sample.env_action.end(),
              command.begin());
    command = ApplyMask(command, ctx.mask);
    const ChannelVector& prev = slot.first_step ? command : slot.prev_action;

    const StepOutcome out =
        EnvStep(slot.state, command, sp, slot.target, ctx.arm);
    const RewardBreakdown r = ComputeReward(out.diagnostics, prev, command,
                                            out.touch, task.weights);
    slot.prev_action = command;
    slot.first_step = false;
    if (out.touch.kind == TouchKind::kError) ++slot.errors;

    for (int k = 0; k < kObservationDim; ++k) {
      batch.observations(k, i) = static_cast<float>(obs[k]);
    }
    for (int c = 0; c < kNumChannels; ++c) {
      batch.actions(c, i) = static_cast<float>(sample.raw[c]);
    }
    batch.log_probs[i] = sample.log_prob;
    batch.rewards[i] = r.total;
    batch.values[i] = value;
    result.sums.progress += r.progress;
    result.sums.touch += r.touch;
    result.sums.jerk += r.jerk;
    result.sums.effort += r.effort;
    result.sums.total += r.total;

    bool end = false;
    bool terminal = false;
    if (out.touch.kind == TouchKind::kSuccess) {
      result.outcomes.push_back(
          MakeOutcome(e, slot, true, out.touch.time, out.termination));
      if (slot.stage == Stage::kContinuousSequences &&
          out.termination == Termination::kRunning) {
        // Next target of the sequence; the arm keeps its state.
        const double tip_s =
            surface.ArclengthOf(ForwardKinematics(slot.state.q, ctx.arm));
        slot.target = SampleTarget(cells, slot.stage, slot.rng, tip_s,
                                   ctx.sampler, 0.0, surface.Length());
        slot.errors = 0;
        slot.attempt_start = slot.state.sim_time;
      } else {
        end = terminal = true;
      }
    } else if (out.termination == Termination::kOutOfBounds) {
      result.outcomes.push_back(MakeOutcome(e, slot, false,
                                            slot.state.sim_time,
                                            out.termination));
      end = terminal = true;
    } else if (out.termination == Termination::kTimeout) {
      result.outcomes.push_back(MakeOutcome(e, slot, false,
                                            slot.state.sim_time,
                                            out.termination));
      end = true;
      batch.next_values[i] = policy.Value(out.observation);
    }
    batch.terminal[i] = terminal ? 1 : 0;
    batch.episode_end[i] = end ? 1 : 0;

    if (end) {
      result.status = ResetSlot(slot, ctx, task, cells);
      if (!result.status.ok()) return;
    }
    if (t > 0 && !batch.episode_end[i - 1]) {
      batch.next_values[i - 1] = value;
    }
  }
  const int last = e * horizon + horizon - 1;
  if (!batch.episode_end[last]) {
    batch.next_values[last] =
        policy.Value(Observe(slot.state, slot.target, sp, ctx.arm));
  }
}

template <typename Fn>
void ParallelFor(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (int i = w; i < n; i += threads) fn(i);
    });
  }
  for (std::thread& t : workers) t.join();
}

}  // namespace

absl::StatusOr<RolloutResult> CollectRollout(const Policy& policy,
                                             std::vector<EnvSlot>& slots,
                                             const EnvContext& ctx,
                                             const TaskSettings& task,
                                             const CellStats& cells,
                                             int threads) {
  const int num_envs = static_cast<int>(slots.size());
  RolloutResult result;
  result.batch.Resize(num_envs, ctx.rollout.horizon, kObservationDim,
                      kNumChannels);
  std::vector<SlotResult> per_env(num_envs);
  ParallelFor(num_envs, threads, [&](int e) {
    RunSlot(e, policy, slots[e], ctx, task, cells, result.batch, per_env[e]);
  });

  RewardTermMeans& m = result.reward_means;
  for (int e = 0; e < num_envs; ++e) {
    if (!per_env[e].status.ok()) return per_env[e].status;
    const RewardTermMeans& s = per_env[e].sums;
    m.progress += s.progress;
    m.touch += s.touch;
    m.jerk += s.jerk;
    m.effort += s.effort;
    m.total += s.total;
    result.outcomes.insert(result.outcomes.end(), per_env[e].outcomes.begin(),
                           per_env[e].outcomes.end());
  }
  const double n = std::max(result.batch.size(), 1);
  m.progress /= n;
  m.touch /= n;
  m.jerk /= n;
  m.effort /= n;
  m.total /= n;
  return result;
}

EvalMetrics ComputeMetrics(std::span<const EpisodeLog> logs) {
  EvalMetrics m;
  m.episodes = static_cast<int>(logs.size());
  int successes = 0;
  double errors = 0.0;
  double time = 0.0;
  for (const EpisodeLog& log : logs) {
    if (!log.success) continue;
    ++successes;
    errors += log.errors;
    time += log.success_time;
  }
  if (m.episodes > 0) {
    m.success_rate = static_cast<double>(successes) / m.episodes;
  }
  if (successes > 0) {
    m.avg_errors_per_success = errors / successes;
    m.avg_time_per_success = time / successes;
  }
  return m;
}

absl::StatusOr<std::vector<EpisodeLog>> RunEvalEpisodes(
    const Policy& policy, const EnvContext& ctx, const EvalOptions& options,
    int threads) {
  std::vector<EpisodeLog> logs(options.episodes);
  std::vector<absl::Status> status(options.episodes);
  const StepParams sp = ctx.rollout.step_params();
  const Surface& surface = ctx.arm.surface;

  ParallelFor(options.episodes, threads, [&](int k) {
    std::seed_seq seq{static_cast<uint32_t>(options.seed),
                      static_cast<uint32_t>(options.seed >> 32),
                      static_cast<uint32_t>(k), 0xe7a1u};
    std::mt19937_64 rng(seq);
    absl::StatusOr<ArmState> init = InitState(rng, ctx.arm);
    if (!init.ok()) {
      status[k] = init.status();
      return;
    }
    ArmState state = *init;
    const Target target = SampleEvalTarget(rng, options.radius,
                                           surface.Length(),
                                           ctx.sampler.num_cells);
    EpisodeLog& log = logs[k];
    while (true) {
      const Observation obs = Observe(state, target, sp, ctx.arm);
      const ActionSample sample = policy.Act(obs, rng);
      ChannelVector command;
      std::copy(sample.env_action.begin(), sample.env_action.end(),
                command.begin());
      command = ApplyMask(command, ctx.mask);
      const StepOutcome out = EnvStep(state, command, sp, target, ctx.arm);
      if (out.touch.kind == TouchKind::kError) ++log.errors;
      if (out.touch.kind == TouchKind::kSuccess &&
          out.touch.time <= sp.episode_limit + 1e-9) {
        log.success = true;
        log.success_time = out.touch.time;
        break;
      }
      if (out.termination != Termination::kRunning) break;
    }
  });
  for (const absl::Status& s : status) {
    if (!s.ok()) return s;
  }
  return logs;
}

absl::StatusOr<EvalMetrics> Evaluate(const Policy& policy,
                                     const EnvContext& ctx,
                                     const EvalOptions& options,
                                     int threads) {
  absl::StatusOr<std::vector<EpisodeLog>> logs =
      RunEvalEpisodes(policy, ctx, options, threads);
  if (!logs.ok()) return logs.status();
  return ComputeMetrics(*logs);
}

int DefaultThreadCount() {
  if (const char* env = std::getenv("DEXTERLAB_THREADS")) {
    int n = 0;
    if (absl::SimpleAtoi(env, &n) && n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace dexterlab
