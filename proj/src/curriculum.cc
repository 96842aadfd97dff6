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

#include "dexterlab/curriculum.h"

#include "absl/strings/str_cat.h"

namespace dexterlab {

std::string StageName(Stage stage) {
  switch (stage) {
    case Stage::kTaskComplexity:
      return "task_complexity";
    case Stage::kDynamicReward:
      return "dynamic_reward";
    case Stage::kAdaptiveSampling:
      return "adaptive_sampling";
    case Stage::kContinuousSequences:
      return "continuous_sequences";
  }
  return "unknown";
}

absl::StatusOr<Stage> StageFromName(const std::string& name) {
  for (int i = 0; i < kNumStages; ++i) {
    if (StageName(static_cast<Stage>(i)) == name) return static_cast<Stage>(i);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown stage '", name, "'"));
}

std::string RewardModeName(RewardMode mode) {
  return mode == RewardMode::kDynamic ? "dynamic" : "early";
}

absl::StatusOr<RewardMode> RewardModeFromName(const std::string& name) {
  if (name == "dynamic") return RewardMode::kDynamic;
  if (name == "early") return RewardMode::kEarly;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown reward_mode '", name, "' (dynamic|early)"));
}

absl::Status CurriculumConfig::Validate() const {
  for (int i = 0; i < kNumStages; ++i) {
    if (sub_stages[i] < 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "curriculum.sub_stages[", i, "] must be at least 1"));
    }
  }
  if (!(advance_threshold > 0.0 && advance_threshold <= 1.0)) {
    return absl::InvalidArgumentError(
        "curriculum.advance_threshold must be in (0, 1]");
  }
  if (window < 1) {
    return absl::InvalidArgumentError("curriculum.window must be at least 1");
  }
  if (!(extrusion_start > 0.0)) {
    return absl::InvalidArgumentError(
        "curriculum.extrusion_start must be positive");
  }
  const RewardWeights& w = final_weights;
  if (!(w.progress >= 0 && w.success_bonus >= 0 && w.wrong_press >= 0 &&
        w.jerk >= 0 && w.effort >= 0)) {
    return absl::InvalidArgumentError(
        "curriculum.final_weights must all be nonnegative");
  }
  return absl::OkStatus();
}

CurriculumState CurriculumState::Initial(bool curriculum_enabled) {
  CurriculumState s;
  if (!curriculum_enabled) s.stage_ = Stage::kAdaptiveSampling;
  return s;
}

double CurriculumState::WindowedSuccessRate() const {
  if (window_.empty()) return 0.0;
  return static_cast<double>(successes_) / static_cast<double>(window_.size());
}

void CurriculumState::RecordEpisode(bool success,
                                    const CurriculumConfig& config) {
  window_.push_back(success);
  successes_ += success ? 1 : 0;
  while (static_cast<int>(window_.size()) > config.window) {
    successes_ -= window_.front() ? 1 : 0;
    window_.pop_front();
  }
  ++episodes_in_substage_;
}

bool CurriculumState::IsFinal(const CurriculumConfig& config) const {
  return stage_ == Stage::kContinuousSequences &&
         sub_stage_ == config.sub_stages[kNumStages - 1] - 1;
}

bool CurriculumState::TryAdvance(const CurriculumConfig& config) {
  if (IsFinal(config)) return false;
  if (static_cast<int>(window_.size()) < config.window) return false;
  // Compare counts; the slack keeps e.g. 350/500 at threshold 0.70 passing.
  const double needed = config.advance_threshold * config.window;
  if (static_cast<double>(successes_) < needed - 1e-9) return false;

  const int stage_index = static_cast<int>(stage_);
  if (sub_stage_ + 1 < config.sub_stages[stage_index]) {
    ++sub_stage_;
  } else {
    stage_ = static_cast<Stage>(stage_index + 1);
    sub_stage_ = 0;
  }
  window_.clear();
  successes_ = 0;
  episodes_in_substage_ = 0;
  return true;
}

absl::StatusOr<CurriculumState> CurriculumState::Restore(
    Stage stage, int sub_stage, int64_t episodes_in_substage,
    const std::deque<bool>& window, const CurriculumConfig& config) {
  const int stage_index = static_cast<int>(stage);
  if (stage_index < 0 || stage_index >= kNumStages) {
    return absl::InvalidArgumentError("curriculum stage out of range");
  }
  if (sub_stage < 0 || sub_stage >= config.sub_stages[stage_index]) {
    return absl::InvalidArgumentError(
        absl::StrCat("curriculum sub_stage ", sub_stage, " out of range"));
  }
  if (static_cast<int>(window.size()) > config.window ||
      episodes_in_substage < 0) {
    return absl::InvalidArgumentError("curriculum window larger than config");
  }
  CurriculumState s;
  s.stage_ = stage;
  s.sub_stage_ = sub_stage;
  s.episodes_in_substage_ = episodes_in_substage;
  s.window_ = window;
  for (bool b : window) s.successes_ += b ? 1 : 0;
  return s;
}

namespace {

// Fraction of the way through the current stage, 1 at its final sub-stage.
double SubStageFraction(const CurriculumState& state,
                        const CurriculumConfig& config) {
  const int k = config.sub_stages[static_cast<int>(state.stage())];
  if (k <= 1) return 1.0;
  return static_cast<double>(state.sub_stage()) / static_cast<double>(k - 1);
}

}  // namespace

double TargetExtrusion(const CurriculumState& state,
                       const CurriculumConfig& config) {
  if (state.stage() != Stage::kTaskComplexity) return 0.0;
  return config.extrusion_start * (1.0 - SubStageFraction(state, config));
}

RewardWeights CurrentRewardWeights(const CurriculumState& state,
                                   const CurriculumConfig& config) {
  RewardWeights w = config.final_weights;
  if (config.reward_mode == RewardMode::kEarly) return w;
  switch (state.stage()) {
    case Stage::kTaskComplexity:
      w.jerk = 0.0;
      w.effort = 0.0;
      break;
    case Stage::kDynamicReward: {
      const double f = SubStageFraction(state, config);
      w.jerk = config.final_weights.jerk * f;
      w.effort = config.final_weights.effort * f;
      break;
    }
    case Stage::kAdaptiveSampling:
    case Stage::kContinuousSequences:
      break;
  }
  return w;
}

}  // namespace dexterlab
