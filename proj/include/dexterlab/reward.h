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

#ifndef DEXTERLAB_REWARD_H_
#define DEXTERLAB_REWARD_H_

#include "dexterlab/arm_env.h"
#include "dexterlab/curriculum.h"

namespace dexterlab {

struct RewardBreakdown {
  double progress = 0.0;  // w_d (d_prev - d_now)
  double touch = 0.0;     // +B on success, -P on a wrong press
  double jerk = 0.0;      // -w_j |action - prev_action|^2
  double effort = 0.0;    // -w_e sum(a^2)
  double total = 0.0;
};

// Per-control-step reward. On the first step of an episode pass
// prev_action == action so the jerk term vanishes.
RewardBreakdown ComputeReward(const StepDiagnostics& diagnostics,
                              const ChannelVector& prev_action,
                              const ChannelVector& action,
                              const TouchEvent& touch,
                              const RewardWeights& weights);

}  // namespace dexterlab

#endif  // DEXTERLAB_REWARD_H_
