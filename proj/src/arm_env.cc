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

#include "dexterlab/arm_env.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace dexterlab {

double Surface::Length() const {
  Vec2 d = end - start;
  return std::hypot(d.x, d.y);
}

Vec2 Surface::Tangent() const { return (1.0 / Length()) * (end - start); }

Vec2 Surface::FrontNormal() const {
  Vec2 t = Tangent();
  return {-t.y, t.x};
}

double Surface::ArclengthOf(Vec2 p) const { return Dot(p - start, Tangent()); }

double Surface::HeightOf(Vec2 p) const {
  return Dot(p - start, FrontNormal());
}

Vec2 Surface::PointAt(double s) const { return start + s * Tangent(); }

Rect WorkspaceAroundSurface(const Surface& surface, double front_depth,
                            double back_depth, double lateral_margin) {
  Vec2 n = surface.FrontNormal();
  Vec2 t = surface.Tangent();
  // Corners of the (arclength, height) box mapped to world coordinates.
  const double s_lo = -lateral_margin;
  const double s_hi = surface.Length() + lateral_margin;
  Rect r{1e300, -1e300, 1e300, -1e300};
  for (double s : {s_lo, s_hi}) {
    for (double h : {-back_depth, front_depth}) {
      Vec2 p = surface.start + s * t + h * n;
      r.x_min = std::min(r.x_min, p.x);
      r.x_max = std::max(r.x_max, p.x);
      r.y_min = std::min(r.y_min, p.y);
      r.y_max = std::max(r.y_max, p.y);
    }
  }
  return r;
}

ArmConfig ArmConfig::Default() {
  ArmConfig c;
  c.joint_limits = {Interval{-1.2, 1.2}, Interval{0.0, 2.6},
                    Interval{-0.4, 0.4}};

  auto& m = c.moment_arms;
  m[0] = {0.04, 0.0, 0.0};
  m[1] = {-0.04, 0.0, 0.0};
  m[2] = {0.0, 0.03, 0.0};
  m[3] = {0.0, -0.03, 0.0};
  m[4] = {0.02, 0.02, 0.0};
  m[5] = {-0.02, -0.02, 0.0};
  m[6] = {0.0, 0.0, 0.01};
  m[7] = {0.0, 0.0, -0.01};
  // 8-10 stay zero.

  c.max_force = {50.0, 50.0, 50.0, 50.0, 40.0, 40.0,
                 20.0, 20.0, 20.0, 20.0, 20.0};
  c.joint_damping = {4.0, 4.0, 1.0};

  c.surface = Surface{{0.60, -0.06}, {0.60, 0.06}};
  c.workspace = WorkspaceAroundSurface(c.surface, /*front_depth=*/0.05,
                                       /*back_depth=*/0.01,
                                       /*lateral_margin=*/0.03);
  c.init_range = {Interval{-0.90, -0.62}, Interval{1.20, 1.38}};
  return c;
}

absl::Status ArmConfig::Validate() const {
  for (int j = 0; j < kNumJoints; ++j) {
    if (!(link_lengths[j] > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("arm.link_lengths[", j, "] must be positive"));
    }
    if (!(joint_limits[j].lo < joint_limits[j].hi)) {
      return absl::InvalidArgumentError(
          absl::StrCat("arm.joint_limits[", j, "] must have lo < hi"));
    }
    if (!(joint_damping[j] >= 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("arm.joint_damping[", j, "] must be nonnegative"));
    }
  }
  if (!(physics_dt > 0.0)) {
    return absl::InvalidArgumentError("arm.physics_dt must be positive");
  }
  if (!(activation_tau > 0.0)) {
    return absl::InvalidArgumentError("arm.activation_tau must be positive");
  }
  for (int c = 0; c < kNumChannels; ++c) {
    if (!(max_force[c] >= 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("arm.max_force[", c, "] must be nonnegative"));
    }
    if (c >= kFirstDistractorChannel) {
      for (int j = 0; j < kNumJoints; ++j) {
        if (moment_arms[c][j] != 0.0) {
          return absl::InvalidArgumentError(absl::StrCat(
              "arm.moment_arms[", c, "] is a distractor channel and must be "
              "zero on every joint"));
        }
      }
    }
  }
  if (!(surface.Length() > 0.0)) {
    return absl::InvalidArgumentError("arm.surface has zero length");
  }
  if (!(workspace.x_min < workspace.x_max &&
        workspace.y_min < workspace.y_max)) {
    return absl::InvalidArgumentError("arm.workspace is empty");
  }
  for (int j = 0; j < 2; ++j) {
    const Interval& r = init_range[j];
    if (!(r.lo <= r.hi) || r.lo < joint_limits[j].lo ||
        r.hi > joint_limits[j].hi) {
      return absl::InvalidArgumentError(absl::StrCat(
          "arm.init_range[", j, "] must be ordered and inside joint_limits"));
    }
  }
  return absl::OkStatus();
}

Vec2 ForwardKinematics(const JointVector& q, const ArmConfig& config) {
  const auto& l = config.link_lengths;
  const double a1 = q[0];
  const double a2 = q[0] + q[1];
  const double a3 = a2 + q[2];
  return {l[0] * std::cos(a1) + l[1] * std::cos(a2) + l[2] * std::cos(a3),
          l[0] * std::sin(a1) + l[1] * std::sin(a2) + l[2] * std::sin(a3)};
}

Vec2 FingertipVelocity(const JointVector& q, const JointVector& qdot,
                       const ArmConfig& config) {
  const auto& l = config.link_lengths;
  const double a1 = q[0];
  const double a2 = q[0] + q[1];
  const double a3 = a2 + q[2];
  const double w1 = qdot[0];
  const double w2 = qdot[0] + qdot[1];
  const double w3 = w2 + qdot[2];
  return {-l[0] * std::sin(a1) * w1 - l[1] * std::sin(a2) * w2 -
              l[2] * std::sin(a3) * w3,
          l[0] * std::cos(a1) * w1 + l[1] * std::cos(a2) * w2 +
              l[2] * std::cos(a3) * w3};
}

double MuscleStep(double a, double u, double dt, double tau) {
  const double next = u + (a - u) * std::exp(-dt / tau);
  return std::clamp(next, 0.0, 1.0);
}

ArmState PhysicsStep(const ArmState& state, const ChannelVector& activation,
                     const ArmConfig& config) {
  ArmState next = state;
  next.prev_fingertip = ForwardKinematics(state.q, config);
  const double dt = config.physics_dt;
  for (int j = 0; j < kNumJoints; ++j) {
    double torque = -config.joint_damping[j] * state.qdot[j];
    for (int m = 0; m < kNumChannels; ++m) {
      torque += config.moment_arms[m][j] * config.max_force[m] * activation[m];
    }
    // Unit inertia, semi-implicit Euler.
    next.qdot[j] = state.qdot[j] + torque * dt;
    next.q[j] = state.q[j] + next.qdot[j] * dt;
    const Interval& lim = config.joint_limits[j];
    if (next.q[j] < lim.lo) {
      next.q[j] = lim.lo;
      next.qdot[j] = 0.0;
    } else if (next.q[j] > lim.hi) {
      next.q[j] = lim.hi;
      next.qdot[j] = 0.0;
    }
  }
  next.activation = activation;
  next.substeps = state.substeps + 1;
  next.sim_time = static_cast<double>(next.substeps) * dt;
  return next;
}

namespace {

// Liang-Barsky clip of p0 + t (p1 - p0), t in [0, 1], against a box in
// (arclength, height) coordinates. Returns the entry parameter or -1.
double SegmentBoxEntry(double s0, double h0, double s1, double h1,
                       double s_lo, double s_hi, double h_lo, double h_hi) {
  double t_enter = 0.0;
  double t_exit = 1.0;
  const double ds = s1 - s0;
  const double dh = h1 - h0;
  const double p[4] = {-ds, ds, -dh, dh};
  const double q[4] = {s0 - s_lo, s_hi - s0, h0 - h_lo, h_hi - h0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return -1.0;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t_enter = std::max(t_enter, r);
    } else {
      t_exit = std::min(t_exit, r);
    }
    if (t_enter > t_exit) return -1.0;
  }
  return t_enter;
}

}  // namespace

TouchEvent DetectTouch(Vec2 prev_tip, Vec2 new_tip, const Target& target,
                       const Surface& surface, double time) {
  TouchEvent event;
  event.time = time;
  const double s0 = surface.ArclengthOf(prev_tip);
  const double s1 = surface.ArclengthOf(new_tip);
  const double h0 = surface.HeightOf(prev_tip);
  const double h1 = surface.HeightOf(new_tip);

  if (target.extrusion_depth > 0.0) {
    const double t = SegmentBoxEntry(
        s0, h0, s1, h1, target.center_s - target.radius,
        target.center_s + target.radius, 0.0, target.extrusion_depth);
    if (t >= 0.0) {
      event.kind = TouchKind::kSuccess;
      event.position_s = s0 + t * (s1 - s0);
      return event;
    }
  }

  if (!(h0 > 0.0 && h1 <= 0.0)) return event;
  const double alpha = h0 / (h0 - h1);
  const double s = s0 + alpha * (s1 - s0);
  if (s < 0.0 || s > surface.Length()) return event;  // missed the screen
  event.position_s = s;
  event.kind = std::abs(s - target.center_s) <= target.radius
                   ? TouchKind::kSuccess
                   : TouchKind::kError;
  return event;
}

Termination CheckTermination(const ArmState& state, double episode_limit,
                             const ArmConfig& config) {
  if (!config.workspace.Contains(ForwardKinematics(state.q, config))) {
    return Termination::kOutOfBounds;
  }
  // sim_time is substeps * dt; the slack absorbs the rounding of that product.
  if (state.sim_time >= episode_limit - 1e-9) return Termination::kTimeout;
  return Termination::kRunning;
}

double DistanceToTarget(Vec2 fingertip, const Target& target,
                        const Surface& surface) {
  Vec2 d = fingertip - surface.PointAt(target.center_s);
  return std::hypot(d.x, d.y);
}

Observation Observe(const ArmState& state, const Target& target,
                    const StepParams& params, const ArmConfig& config) {
  Observation o{};
  for (int j = 0; j < kNumJoints; ++j) {
    o[j] = state.q[j];
    o[3 + j] = state.qdot[j];
  }
  for (int m = 0; m < kNumChannels; ++m) o[6 + m] = state.activation[m];

  const Surface& surface = config.surface;
  const Vec2 tip = ForwardKinematics(state.q, config);
  const Vec2 vel = FingertipVelocity(state.q, state.qdot, config);
  const double tip_s = surface.ArclengthOf(tip);
  const double tip_h = surface.HeightOf(tip);
  o[17] = 20.0 * tip_s;
  o[18] = 20.0 * tip_h;
  o[19] = 10.0 * Dot(vel, surface.Tangent());
  o[20] = 10.0 * Dot(vel, surface.FrontNormal());
  o[21] = 20.0 * target.center_s;
  o[22] = 100.0 * target.radius;
  o[23] = 100.0 * target.extrusion_depth;
  o[24] = std::clamp(
      (params.episode_limit - state.sim_time) / params.episode_limit, 0.0, 1.0);
  o[25] = 100.0 * (tip_s - target.center_s);
  o[26] = 100.0 * tip_h;
  return o;
}

StepOutcome EnvStep(ArmState& state, const ChannelVector& action,
                    const StepParams& params, const Target& target,
                    const ArmConfig& config) {
  StepOutcome out;
  const Surface& surface = config.surface;
  out.diagnostics.distance_before = DistanceToTarget(
      ForwardKinematics(state.q, config), target, surface);

  ChannelVector command;
  for (int m = 0; m < kNumChannels; ++m) {
    command[m] = std::clamp(action[m], 0.0, 1.0);
  }

  double effort = 0.0;
  Vec2 tip = ForwardKinematics(state.q, config);
  for (int k = 0; k < params.frameskip; ++k) {
    ChannelVector a;
    for (int m = 0; m < kNumChannels; ++m) {
      a[m] = MuscleStep(state.activation[m], command[m], config.physics_dt,
                        config.activation_tau);
    }
    state = PhysicsStep(state, a, config);
    tip = ForwardKinematics(state.q, config);
    if (out.touch.kind == TouchKind::kNone) {
      out.touch =
          DetectTouch(state.prev_fingertip, tip, target, surface, state.sim_time);
    }
    double sum_sq = 0.0;
    for (double v : a) sum_sq += v * v;
    effort += sum_sq;
  }
  out.diagnostics.substeps = params.frameskip;
  out.diagnostics.effort = effort / params.frameskip;
  out.diagnostics.distance_after = DistanceToTarget(tip, target, surface);
  out.termination = CheckTermination(state, params.episode_limit, config);
  out.observation = Observe(state, target, params, config);
  return out;
}

absl::StatusOr<ArmState> InitState(std::mt19937_64& rng,
                                   const ArmConfig& config) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < kInitMaxAttempts; ++attempt) {
    ArmState s;
    for (int j = 0; j < 2; ++j) {
      const Interval& r = config.init_range[j];
      s.q[j] = r.lo + (r.hi - r.lo) * unit(rng);
    }
    s.q[2] = 0.0;
    const Vec2 tip = ForwardKinematics(s.q, config);
    if (config.workspace.Contains(tip)) {
      s.prev_fingertip = tip;
      return s;
    }
  }
  return absl::FailedPreconditionError(absl::StrCat(
      "InitFailure: no initial pose inside the workspace after ",
      kInitMaxAttempts, " attempts; check arm.init_range and arm.workspace"));
}

}  // namespace dexterlab
