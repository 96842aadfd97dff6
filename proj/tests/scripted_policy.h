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

// Hand-written reaching controller used by tests that need episodes with
// real successes and errors.

#ifndef DEXTERLAB_TESTS_SCRIPTED_POLICY_H_
#define DEXTERLAB_TESTS_SCRIPTED_POLICY_H_

#include <algorithm>
#include <cmath>
#include <random>

#include "dexterlab/arm_env.h"
#include "dexterlab/rollout.h"

namespace dexterlab {

// Hovers a few millimeters in front of the screen while sliding toward the
// target center, presses once within `press_window` of it, and backs off
// after each crossing. Reads only the observation.
class ScriptedReach : public Policy {
 public:
  explicit ScriptedReach(double press_window = 0.002)
      : config_(ArmConfig::Default()), press_window_(press_window) {}

  ActionSample Act(const Observation& obs, std::mt19937_64&) const override {
    const Surface& surface = config_.surface;
    const JointVector q{obs[0], obs[1], obs[2]};
    const double ds = obs[25] / 100.0;
    const double h = obs[18] / 20.0;
    const double sv = obs[19] / 10.0;
    const double hv = obs[20] / 10.0;
    double goal_h = std::abs(ds) < press_window_ ? -0.01 : 0.004;
    if (h < 0.0) goal_h = 0.006;
    const Vec2 want = (-(40.0 * ds + kTangentDamping * sv)) * surface.Tangent() +
                      (-(400.0 * (h - goal_h) + 20.0 * hv)) *
                          surface.FrontNormal();
    JointVector tau;
    for (int j = 0; j < 3; ++j) {
      JointVector e{};
      e[j] = 1.0;
      tau[j] = Dot(FingertipVelocity(q, e, config_), want);
    }
    ActionSample a;
    a.env_action.assign(kNumChannels, 0.0);
    double peak = 1e-9;
    for (int m = 0; m < kNumChannels; ++m) {
      double v = 0.0;
      for (int j = 0; j < 3; ++j) v += config_.moment_arms[m][j] * tau[j];
      a.env_action[m] = std::max(0.0, v);
      peak = std::max(peak, a.env_action[m]);
    }
    for (double& v : a.env_action) v = std::min(1.0, v / peak);
    a.raw = a.env_action;
    return a;
  }

  double Value(const Observation&) const override { return 0.0; }

 private:
  static constexpr double kTangentDamping = 4.0;
  ArmConfig config_;
  double press_window_;
};

// Never commands any muscle.
class IdlePolicy : public Policy {
 public:
  ActionSample Act(const Observation&, std::mt19937_64&) const override {
    ActionSample a;
    a.raw.assign(kNumChannels, 0.0);
    a.env_action.assign(kNumChannels, 0.0);
    return a;
  }
  double Value(const Observation&) const override { return 0.0; }
};

}  // namespace dexterlab

#endif  // DEXTERLAB_TESTS_SCRIPTED_POLICY_H_
