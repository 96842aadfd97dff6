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

// Planar muscle-actuated arm with an index finger pointing at a 1-D touch
// surface. Shoulder sits at the origin; the chain is upper arm, forearm and
// index finger. Eleven actuator channels drive three joints through constant
// moment arms and first-order activation dynamics.

#ifndef DEXTERLAB_ARM_ENV_H_
#define DEXTERLAB_ARM_ENV_H_

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dexterlab {

inline constexpr int kNumJoints = 3;
inline constexpr int kNumChannels = 11;

// Channel layout.
//   0-1   shoulder flexor / extensor
//   2-3   elbow flexor / extensor
//   4-5   biarticular flexor / extensor (shoulder + elbow)
//   6-7   index finger flexor / extensor
//   8-10  other fingers (no moment arm on any modelled joint)
inline constexpr int kFirstDistractorChannel = 8;

using JointVector = std::array<double, kNumJoints>;
using ChannelVector = std::array<double, kNumChannels>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double Dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Axis-aligned rectangle in world coordinates (meters).
struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool Contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

// The touch surface. Arclength s runs from `start` to `end`; the front side
// (where the finger hovers) is the left-hand normal of start->end.
struct Surface {
  Vec2 start;
  Vec2 end;

  double Length() const;
  Vec2 Tangent() const;
  Vec2 FrontNormal() const;
  // Arclength coordinate of the projection of p onto the surface line.
  double ArclengthOf(Vec2 p) const;
  // Signed distance of p from the surface line, positive on the front side.
  double HeightOf(Vec2 p) const;
  Vec2 PointAt(double s) const;
};

struct ArmConfig {
  // Upper arm, forearm, index finger.
  std::array<double, kNumJoints> link_lengths{0.30, 0.33, 0.08};
  std::array<Interval, kNumJoints> joint_limits{};
  // moment_arms[channel][joint], meters.
  std::array<JointVector, kNumChannels> moment_arms{};
  ChannelVector max_force{};
  JointVector joint_damping{};
  double activation_tau = 0.04;
  double physics_dt = 0.002;
  Surface surface;
  Rect workspace;
  // Shoulder and elbow sampling ranges for episode initialization.
  std::array<Interval, 2> init_range{};

  static ArmConfig Default();
  absl::Status Validate() const;
};

// Workspace rectangle spanning the surface +-lateral_margin, extending
// front_depth in front of it and back_depth behind it. Requires a surface
// aligned with a coordinate axis.
Rect WorkspaceAroundSurface(const Surface& surface, double front_depth,
                            double back_depth, double lateral_margin);

struct ArmState {
  JointVector q{};
  JointVector qdot{};
  ChannelVector activation{};
  double sim_time = 0.0;
  int64_t substeps = 0;
  Vec2 prev_fingertip;
};

struct Target {
  double center_s = 0.0;
  double radius = 0.0;
  double extrusion_depth = 0.0;
};

enum class TouchKind { kNone, kSuccess, kError };

struct TouchEvent {
  TouchKind kind = TouchKind::kNone;
  double position_s = 0.0;  // valid unless kind == kNone
  double time = 0.0;
};

enum class Termination { kRunning, kTimeout, kOutOfBounds };

struct StepDiagnostics {
  double distance_before = 0.0;  // fingertip to target center, meters
  double distance_after = 0.0;
  double effort = 0.0;  // sum of squared activations, mean over substeps
  int substeps = 0;
};

// Observation layout, kObservationDim entries:
//   [0, 3)    joint angles q
//   [3, 6)    joint velocities qdot
//   [6, 17)   activations
//   [17, 19)  fingertip (arclength, height) in the surface frame, x20 (m->
//             units of 5 cm)
//   [19, 21)  fingertip (arclength, height) velocity, x10
//   21        target center arclength, x20
//   22        target radius, x100 (cm)
//   23        target extrusion depth, x100 (cm)
//   24        remaining episode time, normalized to [0, 1]
//   [25, 27)  fingertip minus target center (arclength, height), x100 (cm)
inline constexpr int kObservationDim = 27;
using Observation = std::array<double, kObservationDim>;

struct StepOutcome {
  Observation observation{};
  TouchEvent touch;
  Termination termination = Termination::kRunning;
  StepDiagnostics diagnostics;
};

struct StepParams {
  int frameskip = 3;
  double episode_limit = 10.0;
};

Vec2 ForwardKinematics(const JointVector& q, const ArmConfig& config);

// Fingertip velocity J(q) * qdot.
Vec2 FingertipVelocity(const JointVector& q, const JointVector& qdot,
                       const ArmConfig& config);

// Exact first-order activation update toward command u.
double MuscleStep(double a, double u, double dt, double tau);

// One physics substep with activations `activation` held fixed.
ArmState PhysicsStep(const ArmState& state, const ChannelVector& activation,
                     const ArmConfig& config);

TouchEvent DetectTouch(Vec2 prev_tip, Vec2 new_tip, const Target& target,
                       const Surface& surface, double time);

Termination CheckTermination(const ArmState& state, double episode_limit,
                             const ArmConfig& config);

// Holds `action` for params.frameskip physics substeps, advancing `state`.
// Only the first touch of the control step is reported; further crossings
// inside the same control step belong to the same contact.
StepOutcome EnvStep(ArmState& state, const ChannelVector& action,
                    const StepParams& params, const Target& target,
                    const ArmConfig& config);

Observation Observe(const ArmState& state, const Target& target,
                    const StepParams& params, const ArmConfig& config);

double DistanceToTarget(Vec2 fingertip, const Target& target,
                        const Surface& surface);

// Samples shoulder/elbow uniformly from config.init_range with the finger
// pointing forward, rejecting poses whose fingertip leaves the workspace.
absl::StatusOr<ArmState> InitState(std::mt19937_64& rng,
                                   const ArmConfig& config);

inline constexpr int kInitMaxAttempts = 1000;

}  // namespace dexterlab

#endif  // DEXTERLAB_ARM_ENV_H_
