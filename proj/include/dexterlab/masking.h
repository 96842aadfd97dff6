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

#ifndef DEXTERLAB_MASKING_H_
#define DEXTERLAB_MASKING_H_

#include <cstdint>
#include <vector>

#include "dexterlab/arm_env.h"

namespace dexterlab {

// Per-channel action mask applied between the policy and the environment.
// Masked channels are overwritten with `neutral_value` and excluded from the
// policy log-probability and entropy.
struct ActionMask {
  std::vector<bool> enabled;
  double neutral_value = 0.0;

  // Arm and index finger enabled, other fingers disabled.
  static ActionMask TaskDefault();
  static ActionMask AllEnabled(int num_channels = kNumChannels);

  int size() const { return static_cast<int>(enabled.size()); }
  int NumEnabled() const;
};

ChannelVector ApplyMask(const ChannelVector& action, const ActionMask& mask);

// Linear decay p(t) = p0 * max(0, 1 - t / T).
struct ScheduleSpec {
  double initial_value = 0.0;
  int64_t total_timesteps = 1;
};

double ScheduleValue(const ScheduleSpec& spec, int64_t t);

}  // namespace dexterlab

#endif  // DEXTERLAB_MASKING_H_
