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

#include "dexterlab/reward.h"

namespace dexterlab {

RewardBreakdown ComputeReward(const StepDiagnostics& diagnostics,
                              const ChannelVector& prev_action,
                              const ChannelVector& action,
                              const TouchEvent& touch,
                              const RewardWeights& weights) {
  RewardBreakdown r;
  r.progress = weights.progress *
               (diagnostics.distance_before - diagnostics.distance_after);
  switch (touch.kind) {
    case TouchKind::kSuccess:
      r.touch = weights.success_bonus;
      break;
    case TouchKind::kError:
      r.touch = -weights.wrong_press;
      break;
    case TouchKind::kNone:
      break;
  }
  double change = 0.0;
  for (int c = 0; c < kNumChannels; ++c) {
    const double d = action[c] - prev_action[c];
    change += d * d;
  }
  r.jerk = -weights.jerk * change;
  r.effort = -weights.effort * diagnostics.effort;
  r.total = r.progress + r.touch + r.jerk + r.effort;
  return r;
}

}  // namespace dexterlab
