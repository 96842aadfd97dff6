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

// Four-stage training curriculum. Stage 1 flattens an extruded target into
// the surface, stage 2 phases in the movement-quality penalties, stage 3
// samples targets adaptively and stage 4 chains targets without resets.
// Each stage is split into sub-stages; the agent moves on once the success
// rate over the last `window` episodes reaches `advance_threshold`.

#ifndef DEXTERLAB_CURRICULUM_H_
#define DEXTERLAB_CURRICULUM_H_

#include <array>
#include <cstdint>
#include <deque>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dexterlab {

enum class Stage {
  kTaskComplexity = 0,
  kDynamicReward = 1,
  kAdaptiveSampling = 2,
  kContinuousSequences = 3,
};
inline constexpr int kNumStages = 4;

std::string StageName(Stage stage);
absl::StatusOr<Stage> StageFromName(const std::string& name);

enum class RewardMode { kDynamic, kEarly };

std::string RewardModeName(RewardMode mode);
absl::StatusOr<RewardMode> RewardModeFromName(const std::string& name);

struct RewardWeights {
  double progress = 1.0;        // w_d
  double success_bonus = 10.0;  // B
  double wrong_press = 1.0;     // P
  double jerk = 0.1;            // w_j
  double effort = 0.05;         // w_e
};

struct CurriculumConfig {
  std::array<int, kNumStages> sub_stages{4, 4, 4, 1};
  double advance_threshold = 0.70;
  int window = 500;
  double extrusion_start = 0.020;
  RewardWeights final_weights;
  RewardMode reward_mode = RewardMode::kDynamic;
  // Stage 1 episodes start from the midpoint of the init range.
  bool fixed_start_stage1 = true;

  absl::Status Validate() const;
};

class CurriculumState {
 public:
  // With the curriculum disabled the run stays at the start of stage 3
  // (adaptive targets, flat surface, final reward weights) for good.
  static CurriculumState Initial(bool curriculum_enabled);

  Stage stage() const { return stage_; }
  int sub_stage() const { return sub_stage_; }
  int64_t episodes_in_substage() const { return episodes_in_substage_; }
  int window_size() const { return static_cast<int>(window_.size()); }
  double WindowedSuccessRate() const;
  const std::deque<bool>& window() const { return window_; }

  // Pushes one episode outcome, evicting the oldest beyond `window`.
  void RecordEpisode(bool success, const CurriculumConfig& config);

  // Advances one sub-stage (or stage, from the final sub-stage) when the
  // window is full and its success rate meets the threshold. Clears the
  // window on advancement.
  bool TryAdvance(const CurriculumConfig& config);

  bool IsFinal(const CurriculumConfig& config) const;

  // Restores a serialized state; validates ranges against `config`.
  static absl::StatusOr<CurriculumState> Restore(
      Stage stage, int sub_stage, int64_t episodes_in_substage,
      const std::deque<bool>& window, const CurriculumConfig& config);

  friend bool operator==(const CurriculumState&,
                         const CurriculumState&) = default;

 private:
  Stage stage_ = Stage::kTaskComplexity;
  int sub_stage_ = 0;
  int64_t episodes_in_substage_ = 0;
  std::deque<bool> window_;
  int successes_ = 0;
};

// Depth of the stage-1 target protrusion above the surface.
double TargetExtrusion(const CurriculumState& state,
                       const CurriculumConfig& config);

RewardWeights CurrentRewardWeights(const CurriculumState& state,
                                   const CurriculumConfig& config);

}  // namespace dexterlab

#endif  // DEXTERLAB_CURRICULUM_H_
