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

#include "dexterlab/masking.h"

#include <algorithm>

namespace dexterlab {

ActionMask ActionMask::TaskDefault() {
  ActionMask mask;
  mask.enabled.assign(kNumChannels, true);
  for (int c = kFirstDistractorChannel; c < kNumChannels; ++c) {
    mask.enabled[c] = false;
  }
  return mask;
}

ActionMask ActionMask::AllEnabled(int num_channels) {
  ActionMask mask;
  mask.enabled.assign(num_channels, true);
  return mask;
}

int ActionMask::NumEnabled() const {
  return static_cast<int>(std::count(enabled.begin(), enabled.end(), true));
}

ChannelVector ApplyMask(const ChannelVector& action, const ActionMask& mask) {
  ChannelVector out = action;
  for (int c = 0; c < kNumChannels; ++c) {
    if (!mask.enabled[c]) out[c] = mask.neutral_value;
  }
  return out;
}

double ScheduleValue(const ScheduleSpec& spec, int64_t t) {
  const double progress = static_cast<double>(t) /
                          static_cast<double>(spec.total_timesteps);
  return spec.initial_value * std::max(0.0, 1.0 - progress);
}

}  // namespace dexterlab
