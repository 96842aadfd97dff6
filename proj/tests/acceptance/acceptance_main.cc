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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dexterlab/arm_env.h"
#include "dexterlab/checkpoint.h"
#include "dexterlab/config.h"
#include "dexterlab/curriculum.h"
#include "dexterlab/experiment.h"
#include "dexterlab/masking.h"
#include "dexterlab/network.h"
#include "dexterlab/ppo.h"
#include "dexterlab/rollout.h"
#include "dexterlab/target_sampler.h"
#include "dexterlab/trainer.h"

namespace dexterlab {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

struct Options {
  std::string work_dir = "acceptance_runs";
  std::string config_dir;
  bool reuse_runs = false;
  int eval_episodes = 200;
  int threads = 1;
};

// Collects failed expectations; the summary is printed after PASS/FAIL.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void Note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }
  std::string Summary() const {
    std::vector<std::string> parts = notes_;
    if (failed_ > 0) {
      parts.push_back(absl::StrCat(failed_, " failed"));
      for (const std::string& f : failures_) parts.push_back(f);
    }
    std::string out;
    for (const std::string& p : parts) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }

 private:
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

// 1. Arm oracles.

JointVector QuarterStepReference(const ArmConfig& c, JointVector q,
                                 const std::vector<ChannelVector>& acts) {
  JointVector qd{0.0, 0.0, 0.0};
  const double h = c.physics_dt / 4.0;
  for (const ChannelVector& a : acts) {
    for (int k = 0; k < 4; ++k) {
      for (int j = 0; j < kNumJoints; ++j) {
        double tau = -c.joint_damping[j] * qd[j];
        for (int m = 0; m < kNumChannels; ++m) {
          tau += c.moment_arms[m][j] * c.max_force[m] * a[m];
        }
        qd[j] += tau * h;
        q[j] += qd[j] * h;
        if (q[j] < c.joint_limits[j].lo) {
          q[j] = c.joint_limits[j].lo;
          qd[j] = 0.0;
        }
        if (q[j] > c.joint_limits[j].hi) {
          q[j] = c.joint_limits[j].hi;
          qd[j] = 0.0;
        }
      }
    }
  }
  return q;
}

void ArmOracles(const Options&, Checker& check) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double muscle_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = unit(rng), u = unit(rng);
    const double dt = 1e-4 + 0.05 * unit(rng);
    const double tau = 0.01 + 0.1 * unit(rng);
    muscle_err = std::max(muscle_err, std::abs(MuscleStep(a, u, dt, tau) -
                                               (u + (a - u) * std::exp(-dt / tau))));
  }
  check.Expect(muscle_err <= 1e-12, "muscle_step vs closed form");

  const ArmConfig c = ArmConfig::Default();
  const double r3 = std::sqrt(3.0);
  const std::vector<std::pair<JointVector, Vec2>> poses{
      {{0.0, 0.0, 0.0}, {0.71, 0.0}},
      {{kPi / 2, 0.0, 0.0}, {0.0, 0.71}},
      {{0.0, kPi / 2, 0.0}, {0.30, 0.41}},
      {{0.0, 0.0, kPi / 2}, {0.63, 0.08}},
      {{kPi / 6, kPi / 3, -kPi / 6}, {0.15 * r3 + 0.04, 0.48 + 0.04 * r3}},
  };
  double fk_err = 0.0;
  for (const auto& [q, want] : poses) {
    const Vec2 p = ForwardKinematics(q, c);
    fk_err = std::max({fk_err, std::abs(p.x - want.x), std::abs(p.y - want.y)});
  }
  check.Expect(fk_err <= 1e-12, "forward_kinematics vs hand poses");

  double phys_err = 0.0;
  const int steps = static_cast<int>(std::lround(1.0 / c.physics_dt));
  for (int trial = 0; trial < 5; ++trial) {
    std::array<double, kNumChannels> freq, phase;
    for (int m = 0; m < kNumChannels; ++m) {
      freq[m] = 1.0 + 4.0 * unit(rng);
      phase[m] = 2 * kPi * unit(rng);
    }
    std::vector<ChannelVector> acts(steps);
    for (int k = 0; k < steps; ++k) {
      for (int m = 0; m < kNumChannels; ++m) {
        acts[k][m] = 0.5 + 0.4 * std::sin(freq[m] * k * c.physics_dt + phase[m]);
      }
    }
    const JointVector q0{-0.76, 1.29, 0.0};
    ArmState s;
    s.q = q0;
    for (int k = 0; k < steps; ++k) {
      s = PhysicsStep(s, acts[k], c);
      if ((k + 1) % 50 == 0) {
        const JointVector ref = QuarterStepReference(
            c, q0, std::vector<ChannelVector>(acts.begin(), acts.begin() + k + 1));
        for (int j = 0; j < kNumJoints; ++j) {
          phys_err = std::max(phys_err, std::abs(ref[j] - s.q[j]));
        }
      }
    }
  }
  check.Expect(phys_err <= 1e-3, "physics_step vs quarter-dt reference");
  check.Note(absl::StrFormat("muscle %.1e, fk %.1e, physics %.2e rad", muscle_err,
                             fk_err, phys_err));
}

// 2. GAE.

void GaeEquivalence(const Options&, Checker& check) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> len(1, 50);
  std::bernoulli_distribution done(0.1), timeout(0.5);
  const double gamma = 0.99, lambda = 0.95;
  double max_err = 0.0;
  for (int batch = 0; batch < 100; ++batch) {
    const int n = len(rng);
    std::vector<double> r(n), v(n), nv(n), adv(n), ret(n);
    std::vector<uint8_t> term(n, 0), end(n, 0);
    for (int t = 0; t < n; ++t) {
      r[t] = u(rng);
      v[t] = u(rng);
      nv[t] = u(rng);
      if (done(rng)) {
        end[t] = 1;
        term[t] = timeout(rng) ? 0 : 1;
      }
    }
    ComputeGaeFragment(r, v, nv, term, end, gamma, lambda, adv, ret);
    for (int t = 0; t < n; ++t) {
      double sum = 0.0, w = 1.0;
      for (int k = t; k < n; ++k) {
        sum += w * (r[k] + (term[k] ? 0.0 : gamma * nv[k]) - v[k]);
        if (end[k]) break;
        w *= gamma * lambda;
      }
      max_err = std::max({max_err, std::abs(adv[t] - sum),
                          std::abs(ret[t] - (sum + v[t]))});
    }
  }
  check.Expect(max_err <= 1e-10, "recursive GAE vs direct sum");
  check.Note(absl::StrFormat("max error %.1e over 100 batches", max_err));
}

// 3 and 5. Small PPO problems.

struct LossProblem {
  PolicyParams<double> params;
  Minibatch<double> batch;
  ActionMask mask;
};

LossProblem RandomLossProblem(uint64_t seed, int obs_dim, int hidden,
                              const ActionMask& mask, int batch_size) {
  std::mt19937_64 rng(seed);
  const int actions = static_cast<int>(mask.enabled.size());
  LossProblem p;
  p.mask = mask;
  p.params =
      PolicyParams<double>::Initialize({obs_dim, hidden, actions}, rng, -0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  p.params.tensor(kPolicyW2) *= 50.0;
  for (int c = 0; c < actions; ++c) {
    p.params.tensor(kLogStd)(c, 0) = -0.7 + 0.2 * normal(rng);
  }
  Minibatch<double>& b = p.batch;
  b.observations = Eigen::MatrixXd::NullaryExpr(
      obs_dim, batch_size, [&] { return normal(rng); });
  const Eigen::MatrixXd mean = PolicyForward(p.params, b.observations);
  b.actions.resize(actions, batch_size);
  b.old_log_probs.resize(batch_size);
  b.advantages.resize(batch_size);
  b.returns.resize(batch_size);
  std::uniform_real_distribution<double> shift(-0.4, 0.4);
  for (int i = 0; i < batch_size; ++i) {
    std::vector<double> m(actions), ls(actions), a(actions);
    for (int c = 0; c < actions; ++c) {
      m[c] = mean(c, i);
      ls[c] = p.params.tensor(kLogStd)(c, 0);
      a[c] = m[c] + std::exp(ls[c]) * normal(rng);
      b.actions(c, i) = a[c];
    }
    b.old_log_probs(i) = GaussianLogProb(m, ls, a, p.mask) + shift(rng);
    b.advantages(i) = normal(rng);
    b.returns(i) = normal(rng);
  }
  return p;
}

void GradientCheck(const Options&, Checker& check) {
  const LossCoefficients coefs{0.2, 0.5, 0.01};
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int actions = 2 + trial % 3;
    ActionMask mask = ActionMask::AllEnabled(actions);
    if (trial % 2 == 1) mask.enabled[actions - 1] = false;
    LossProblem p = RandomLossProblem(100 + trial, 3 + trial % 4,
                                      4 + 2 * (trial % 3), mask, 12);
    Eigen::VectorXd grad;
    PpoLoss(p.params, p.batch, p.mask, coefs, &grad);
    Eigen::VectorXd numeric(grad.size());
    Eigen::VectorXd* no_grad = nullptr;
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      const double saved = p.params.flat()(k);
      p.params.flat()(k) = saved + h;
      const double up = PpoLoss(p.params, p.batch, p.mask, coefs, no_grad).total;
      p.params.flat()(k) = saved - h;
      const double down =
          PpoLoss(p.params, p.batch, p.mask, coefs, no_grad).total;
      p.params.flat()(k) = saved;
      numeric(k) = (up - down) / (2 * h);
    }
    for (const TensorInfo& t : p.params.layout()) {
      const Eigen::VectorXd a = grad.segment(t.offset, t.size());
      const Eigen::VectorXd n = numeric.segment(t.offset, t.size());
      const double scale = std::max(a.norm(), n.norm());
      if (scale < 1e-10) continue;
      const double rel = (a - n).norm() / scale;
      worst = std::max(worst, rel);
      check.Expect(rel <= 1e-4,
                   absl::StrCat("network ", trial, " tensor ", t.name));
    }
  }
  check.Note(absl::StrFormat("worst relative error %.2e over 20 networks",
                             worst));
}

// 4. Schedules.

void ScheduleExactness(const Options&, Checker& check) {
  const PpoConfig config;
  const int64_t T = 5'000'000;
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const ScheduleSpec lr{config.learning_rate, T};
  const ScheduleSpec clip{config.clip_range, T};
  check.Expect(near(ScheduleValue(lr, 0), 6e-4), "lr(0)");
  check.Expect(near(ScheduleValue(lr, T / 2), 3e-4), "lr(T/2)");
  check.Expect(near(ScheduleValue(lr, T), 0.0), "lr(T)");
  check.Expect(near(ScheduleValue(clip, 0), 0.2), "clip(0)");
  check.Expect(near(ScheduleValue(clip, T / 2), 0.1), "clip(T/2)");

  // The values the learner actually applies.
  PpoConfig one_epoch = config;
  one_epoch.epochs = 1;
  RolloutBatch b;
  b.Resize(1, 8, 4, kNumChannels);
  b.observations.setZero();
  b.actions.setZero();
  std::fill(b.log_probs.begin(), b.log_probs.end(), -5.0);
  std::mt19937_64 rng(4);
  PolicyParams<float> params =
      PolicyParams<float>::Initialize({4, 8, kNumChannels}, rng, std::log(0.3));
  AdamState<float> adam = AdamState<float>::Zeros(params.flat().size());
  const ActionMask mask = ActionMask::TaskDefault();
  for (const auto& [t, want_lr, want_clip] :
       std::vector<std::tuple<int64_t, double, double>>{
           {0, 6e-4, 0.2}, {T / 2, 3e-4, 0.1}, {T, 0.0, 0.0}}) {
    absl::StatusOr<UpdateStats> s =
        PpoUpdate(params, adam, b, one_epoch, mask, t, T, rng);
    check.Expect(s.ok() && near(s->learning_rate, want_lr) &&
                     near(s->clip_range, want_clip),
                 absl::StrCat("learner schedule at t=", t));
  }
  check.Note("lr 6e-4 -> 3e-4 -> 0, clip 0.2 -> 0.1");
}

// 5. Masking invariance.

class PerturbMasked : public Policy {
 public:
  PerturbMasked(const Policy& inner, const ActionMask& mask)
      : inner_(inner), mask_(mask) {}
  ActionSample Act(const Observation& obs, std::mt19937_64& rng) const override {
    ActionSample s = inner_.Act(obs, rng);
    for (int c = 0; c < kNumChannels; ++c) {
      if (mask_.enabled[c]) continue;
      s.raw[c] = 3.0 * std::sin(1000.0 * obs[0] + c);
      s.env_action[c] = std::clamp(s.raw[c], 0.0, 1.0);
    }
    return s;
  }
  double Value(const Observation& obs) const override {
    return inner_.Value(obs);
  }

 private:
  const Policy& inner_;
  ActionMask mask_;
};

void MaskingInvariance(const Options&, Checker& check) {
  EnvContext ctx;
  ctx.arm = ArmConfig::Default();
  ctx.rollout.num_envs = 4;
  ctx.rollout.horizon = 500;
  ctx.mask = ActionMask::TaskDefault();
  const CellStats cells = CellStats::Create(16);
  int masked = 0;
  for (bool e : ctx.mask.enabled) masked += e ? 0 : 1;
  check.Expect(masked > 0, "default mask disables a channel");

  for (Stage stage : {Stage::kTaskComplexity, Stage::kAdaptiveSampling,
                      Stage::kContinuousSequences}) {
    TaskSettings task;
    task.stage = stage;
    std::mt19937_64 init(5);
    PolicyParams<float> params = PolicyParams<float>::Initialize(
        {kObservationDim, 32, kNumChannels}, init, std::log(0.3));
    params.tensor(kPolicyB2).setConstant(0.3f);
    const NetworkPolicy base(params, ctx.mask, false);
    const PerturbMasked perturbed(base, ctx.mask);
    auto run = [&](const Policy& policy) {
      std::vector<EnvSlot> slots = MakeEnvSlots(6, ctx.rollout.num_envs);
      for (EnvSlot& s : slots) (void)ResetSlot(s, ctx, task, cells);
      return CollectRollout(policy, slots, ctx, task, cells);
    };
    absl::StatusOr<RolloutResult> a = run(base);
    absl::StatusOr<RolloutResult> b = run(perturbed);
    if (!a.ok() || !b.ok()) {
      check.Expect(false, "rollout failed");
      continue;
    }
    bool same = a->batch.observations == b->batch.observations &&
                a->batch.rewards == b->batch.rewards &&
                a->batch.log_probs == b->batch.log_probs &&
                a->batch.episode_end == b->batch.episode_end &&
                a->outcomes.size() == b->outcomes.size();
    for (int c = 0; c < kNumChannels; ++c) {
      if (ctx.mask.enabled[c]) {
        same = same && a->batch.actions.row(c) == b->batch.actions.row(c);
      }
    }
    check.Expect(same, absl::StrCat("trajectories differ in ", StageName(stage)));
  }

  const ActionMask mask = ActionMask::TaskDefault();
  const LossCoefficients coefs{0.2, 0.5, 0.001};
  for (int trial = 0; trial < 5; ++trial) {
    LossProblem p = RandomLossProblem(200 + trial, kObservationDim, 16, mask, 32);
    Eigen::VectorXd g0, g1;
    const LossStats s0 = PpoLoss(p.params, p.batch, p.mask, coefs, &g0);
    std::mt19937_64 rng(300 + trial);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int c = 0; c < kNumChannels; ++c) {
      if (mask.enabled[c]) continue;
      for (int k = 0; k < 16; ++k) p.params.tensor(kPolicyW2)(c, k) = normal(rng);
      p.params.tensor(kPolicyB2)(c, 0) = normal(rng);
      p.params.tensor(kLogStd)(c, 0) = normal(rng);
      for (int i = 0; i < 32; ++i) p.batch.actions(c, i) = normal(rng);
    }
    const LossStats s1 = PpoLoss(p.params, p.batch, p.mask, coefs, &g1);
    check.Expect(s0.total == s1.total && s0.policy_loss == s1.policy_loss &&
                     s0.value_loss == s1.value_loss &&
                     s0.entropy == s1.entropy && g0 == g1,
                 absl::StrCat("loss changed in problem ", trial));
  }
  check.Note(absl::StrCat(masked,
                          " masked channel(s); 3 stages x 4 envs x 500 steps "
                          "and 5 loss problems bitwise equal"));
}

// 6. Target sampler.

void SamplerDistribution(const Options&, Checker& check) {
  const SamplerConfig config;
  const double length = ArmConfig::Default().surface.Length();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CellStats stats = CellStats::Create(config.num_cells);
  for (double& e : stats.ema_success) e = unit(rng);
  std::vector<double> want(config.num_cells);
  double total = 0.0;
  for (int c = 0; c < config.num_cells; ++c) {
    want[c] = std::max(0.0, 1.0 - stats.ema_success[c]) + config.epsilon;
    total += want[c];
  }
  const int n = 100000;
  std::vector<int> hits(config.num_cells, 0), bins(11, 0);
  const double width = (config.radius_max - config.radius_min) / 11;
  for (int i = 0; i < n; ++i) {
    const Target t = SampleTarget(stats, Stage::kAdaptiveSampling, rng, 0.0,
                                  config, 0.0, length);
    ++hits[CellIndexOf(t.center_s, length, config.num_cells)];
    check.Expect(t.radius >= 0.0015 && t.radius <= 0.007, "radius range");
    ++bins[std::min(10, static_cast<int>((t.radius - 0.0015) / width))];
  }
  double cell_dev = 0.0, bin_dev = 0.0;
  for (int c = 0; c < config.num_cells; ++c) {
    cell_dev = std::max(cell_dev,
                        std::abs(static_cast<double>(hits[c]) / n - want[c] / total));
  }
  for (int b = 0; b < 11; ++b) {
    bin_dev = std::max(bin_dev, std::abs(static_cast<double>(bins[b]) / n - 1.0 / 11));
  }
  check.Expect(cell_dev <= 0.01, "cell frequencies");
  check.Expect(bin_dev <= 0.01, "radius bins");
  check.Note(absl::StrFormat("max cell deviation %.4f, max radius-bin deviation %.4f",
                             cell_dev, bin_dev));
}

// 7. Curriculum.

void CurriculumMachine(const Options&, Checker& check) {
  const CurriculumConfig c;
  check.Expect(c.advance_threshold == 0.70 && c.window == 500,
               "default threshold and window");

  CurriculumState s = CurriculumState::Initial(true);
  std::vector<std::pair<int, int>> visited{{0, 0}};
  std::vector<double> extrusion{TargetExtrusion(s, c)};
  int since = 0;
  bool spacing_ok = true;
  for (int e = 0; e < 20000; ++e) {
    s.RecordEpisode(true, c);
    ++since;
    if (s.TryAdvance(c)) {
      visited.emplace_back(static_cast<int>(s.stage()), s.sub_stage());
      extrusion.push_back(TargetExtrusion(s, c));
      spacing_ok = spacing_ok && since == 500;
      since = 0;
    }
  }
  const std::vector<std::pair<int, int>> expected{
      {0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 1}, {1, 2},
      {1, 3}, {2, 0}, {2, 1}, {2, 2}, {2, 3}, {3, 0}};
  check.Expect(visited == expected, "stage/sub-stage order");
  check.Expect(spacing_ok, "advance every 500 successes");
  check.Expect(s.IsFinal(c), "final stage is terminal");
  for (size_t i = 0; i < extrusion.size(); ++i) {
    const double want = i < 4 ? 0.020 * (3.0 - i) / 3.0 : 0.0;
    check.Expect(std::abs(extrusion[i] - want) <= 1e-15,
                 absl::StrCat("extrusion at step ", i));
  }

  // Threshold boundary: 349/500 stays, 350/500 advances.
  for (const auto& [successes, advances] :
       std::vector<std::pair<int, bool>>{{349, false}, {350, true}}) {
    CurriculumState b = *CurriculumState::Restore(Stage::kAdaptiveSampling, 1,
                                                  0, {}, c);
    for (int i = 0; i < 500 - successes; ++i) b.RecordEpisode(false, c);
    for (int i = 0; i < successes; ++i) b.RecordEpisode(true, c);
    check.Expect(b.TryAdvance(c) == advances,
                 absl::StrCat(successes, "/500 boundary"));
  }
  CurriculumState partial = CurriculumState::Initial(true);
  for (int i = 0; i < 499; ++i) partial.RecordEpisode(true, c);
  check.Expect(!partial.TryAdvance(c), "partial window never advances");

  // Random streams against an independent sliding window.
  std::mt19937_64 rng(7);
  for (int run = 0; run < 20; ++run) {
    std::bernoulli_distribution p(0.55 + 0.02 * run);
    CurriculumState r = CurriculumState::Initial(true);
    std::deque<bool> window;
    int order = 0;
    for (int e = 0; e < 30000; ++e) {
      const bool ok = p(rng);
      r.RecordEpisode(ok, c);
      window.push_back(ok);
      if (window.size() > 500) window.pop_front();
      const int hits = static_cast<int>(std::count(window.begin(), window.end(), true));
      const bool should = window.size() == 500 && hits >= 350 && !r.IsFinal(c);
      const bool did = r.TryAdvance(c);
      if (did != should) {
        check.Expect(false, absl::StrCat("random run ", run, " episode ", e));
        break;
      }
      if (did) {
        window.clear();
        const int now = static_cast<int>(r.stage()) * 4 + r.sub_stage();
        check.Expect(now > order, "monotone progression");
        order = now;
      }
    }
  }
  check.Note("13 sub-stages in order, 349/500 holds, 350/500 advances, "
             "extrusion 20 mm -> 0");
}

// 8. Metrics.

void MetricHarness(const Options&, Checker& check) {
  struct Case {
    std::vector<EpisodeLog> logs;
    double rate;
    std::optional<double> errors, time;
  };
  const std::vector<Case> cases{
      {{{true, 1.0, 2}, {true, 2.0, 0}, {false, 0.0, 0}}, 2.0 / 3.0, 1.0, 1.5},
      {{{false, 0.0, 9}, {true, 3.0, 4}, {false, 0.0, 1}, {true, 0.5, 0}},
       0.5, 2.0, 1.75},
      {{{true, 0.25, 1}}, 1.0, 1.0, 0.25},
      {{{false, 0.0, 3}, {false, 0.0, 0}}, 0.0, std::nullopt, std::nullopt},
  };
  for (size_t i = 0; i < cases.size(); ++i) {
    const EvalMetrics m = ComputeMetrics(cases[i].logs);
    check.Expect(m.episodes == static_cast<int>(cases[i].logs.size()) &&
                     m.success_rate == cases[i].rate &&
                     m.avg_errors_per_success == cases[i].errors &&
                     m.avg_time_per_success == cases[i].time,
                 absl::StrCat("canned log ", i));
  }
  check.Note(absl::StrCat(cases.size(), " canned logs exact"));
}

// 9. Desk-scale ablation.

struct RunResult {
  bool ok = false;
  std::string error;
  std::map<double, EvalMetrics> eval;  // by radius in mm
};

RunResult TrainAndEvaluate(const Options& opt, const std::string& name,
                           const std::vector<double>& radii_mm) {
  RunResult result;
  absl::StatusOr<ExperimentConfig> config =
      LoadConfigFile((fs::path(opt.config_dir) / (name + ".json")).string());
  if (!config.ok()) {
    result.error = std::string(config.status().message());
    return result;
  }
  config->output_dir = (fs::path(opt.work_dir) / name).string();
  const fs::path latest = fs::path(config->output_dir) / kLatestCheckpointName;

  std::optional<PolicyParams<float>> params;
  if (opt.reuse_runs && fs::exists(latest)) {
    absl::StatusOr<Checkpoint> ck = LoadCheckpoint(latest.string());
    if (ck.ok() && ck->state.timestep >= config->total_timesteps &&
        SerializeConfig(ck->config) == SerializeConfig(*config)) {
      std::cerr << name << ": reusing " << latest << "\n";
      params = std::move(ck->state.params);
    }
  }
  if (!params) {
    fs::remove_all(config->output_dir);
    fs::create_directories(config->output_dir);
    std::cerr << name << ": training " << config->total_timesteps
              << " steps in " << config->output_dir << "\n";
    TrainOptions train;
    train.threads = opt.threads;
    train.progress = &std::cerr;
    absl::StatusOr<TrainingState> state = RunTraining(*config, train);
    if (!state.ok()) {
      result.error = std::string(state.status().message());
      return result;
    }
    params = std::move(state->params);
  }

  const EnvContext ctx = config->MakeEnvContext();
  const NetworkPolicy policy(*params, ctx.mask, /*deterministic=*/true);
  for (double r : radii_mm) {
    EvalOptions eval;
    eval.episodes = opt.eval_episodes;
    eval.radius = r / 1000.0;
    eval.seed = 12345;
    absl::StatusOr<EvalMetrics> m = Evaluate(policy, ctx, eval, opt.threads);
    if (!m.ok()) {
      result.error = std::string(m.status().message());
      return result;
    }
    result.eval[r] = *m;
    ExperimentConfig row_config = *config;
    ResultRow row = MakeResultRow(row_config, r);
    row.metrics = *m;
    (void)AppendResultRow((fs::path(opt.work_dir) / "results.csv").string(), row);
  }
  result.ok = true;
  return result;
}

void DeskAblation(const Options& opt, Checker& check) {
  fs::create_directories(opt.work_dir);
  fs::remove(fs::path(opt.work_dir) / "results.csv");
  const RunResult a = TrainAndEvaluate(opt, "desk_curriculum", {5.0, 1.5});
  const RunResult b = TrainAndEvaluate(opt, "desk_no_curriculum", {5.0, 1.5});
  const RunResult d = TrainAndEvaluate(opt, "desk_early_reward", {5.0, 1.5});
  for (const auto& [name, r] :
       {std::pair{"curriculum", &a}, {"no-curriculum", &b}, {"early", &d}}) {
    check.Expect(r->ok, absl::StrCat(name, " run failed: ", r->error));
  }
  if (!a.ok || !b.ok || !d.ok) return;
  const double a5 = a.eval.at(5.0).success_rate;
  const double a15 = a.eval.at(1.5).success_rate;
  const double b15 = b.eval.at(1.5).success_rate;
  const double d15 = d.eval.at(1.5).success_rate;
  check.Expect(a5 >= 0.80, "(a) curriculum at 5 mm >= 80%");
  check.Expect(b15 <= 0.30, "(b) no-curriculum at 1.5 mm <= 30%");
  check.Expect(a15 - b15 >= 0.30, "(c) curriculum beats no-curriculum by 30 pts");
  check.Expect(a15 >= d15 - 0.05, "(d) dynamic >= early within 5 pts");
  check.Note(absl::StrFormat(
      "curriculum 5mm %.1f%% 1.5mm %.1f%%; no-curriculum 5mm %.1f%% 1.5mm "
      "%.1f%%; early 5mm %.1f%% 1.5mm %.1f%% (%d episodes each)",
      100 * a5, 100 * a15, 100 * b.eval.at(5.0).success_rate, 100 * b15,
      100 * d.eval.at(5.0).success_rate, 100 * d15, opt.eval_episodes));
}

// 10. Determinism and resume.

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void DeterminismAndResume(const Options& opt, Checker& check) {
  const fs::path root = fs::path(opt.work_dir) / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  ExperimentConfig base;
  base.seed = 2024;
  base.ppo.hidden = 128;
  base.rollout.num_envs = 4;
  base.rollout.horizon = 256;
  base.total_timesteps = 12 * 4 * 256;
  base.checkpoint_every = 4;
  base.curriculum.final_weights.progress = 100.0;

  auto with_dir = [&](const std::string& name) {
    ExperimentConfig c = base;
    c.output_dir = (root / name).string();
    return c;
  };
  const ExperimentConfig c1 = with_dir("first");
  const ExperimentConfig c2 = with_dir("second");
  const ExperimentConfig cr = with_dir("resumed");

  TrainOptions options;
  options.threads = opt.threads;
  absl::StatusOr<TrainingState> s1 = RunTraining(c1, options);
  TrainOptions other_threads = options;
  other_threads.threads = opt.threads == 1 ? 2 : 1;
  absl::StatusOr<TrainingState> s2 = RunTraining(c2, other_threads);
  TrainOptions half = options;
  half.stop_after_updates = 6;
  absl::StatusOr<TrainingState> mid = RunTraining(cr, half);
  TrainOptions rest = options;
  rest.resume_path = (fs::path(cr.output_dir) / kLatestCheckpointName).string();
  absl::StatusOr<TrainingState> sr =
      mid.ok() ? RunTraining(cr, rest) : mid.status();
  check.Expect(s1.ok() && s2.ok() && mid.ok() && sr.ok(), "training failed");
  if (!s1.ok() || !s2.ok() || !mid.ok() || !sr.ok()) return;

  const std::string log1 = ReadFile(fs::path(c1.output_dir) / kTrainLogName);
  check.Expect(mid->update == 6 && s1->update == 12, "update counts");
  check.Expect(!log1.empty() &&
                   log1 == ReadFile(fs::path(c2.output_dir) / kTrainLogName),
               "repeat run logs differ");
  check.Expect(s1->params.flat() == s2->params.flat(),
               "repeat run params differ");
  check.Expect(sr->params.flat() == s1->params.flat(),
               "resumed params differ");
  check.Expect(SerializeCheckpoint(c1, *sr) == SerializeCheckpoint(c1, *s1),
               "resumed state differs");
  check.Expect(ReadFile(fs::path(cr.output_dir) / kTrainLogName) == log1,
               "resumed log differs");
  check.Note(absl::StrFormat(
      "12 updates x %d steps: repeat log identical, midpoint resume bitwise "
      "identical (%d params)",
      4 * 256, static_cast<int>(s1->params.flat().size())));
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(const Options&, Checker&)> run;
};

}  // namespace
}  // namespace dexterlab

int main(int argc, char** argv) {
  using namespace dexterlab;
  Options opt;
  opt.config_dir = std::string(DEXTERLAB_SOURCE_DIR) + "/configs";
  opt.threads = DefaultThreadCount();
  std::vector<int> only;

  CLI::App app{"dexterlab acceptance checks"};
  app.add_option("--only", only, "Run only these criteria (1-10)")
      ->delimiter(',')
      ->check(CLI::Range(1, 10));
  app.add_option("--work-dir", opt.work_dir, "Directory for training runs");
  app.add_option("--config-dir", opt.config_dir, "Directory with run configs");
  app.add_flag("--reuse-runs", opt.reuse_runs,
               "Reuse finished training runs found in --work-dir");
  app.add_option("--eval-episodes", opt.eval_episodes,
                 "Evaluation episodes per run and radius")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", opt.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "arm analytic oracles", ArmOracles},
      {2, "GAE brute-force equivalence", GaeEquivalence},
      {3, "PPO gradient check", GradientCheck},
      {4, "schedule exactness", ScheduleExactness},
      {5, "masking invariance", MaskingInvariance},
      {6, "sampler distribution", SamplerDistribution},
      {7, "curriculum machine", CurriculumMachine},
      {8, "metric harness", MetricHarness},
      {9, "desk-scale ablation", DeskAblation},
      {10, "determinism and resume", DeterminismAndResume},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    Checker check;
    c.run(opt, check);
    if (!check.ok()) ++failed;
    std::cout << "criterion " << c.id << " (" << c.name
              << "): " << (check.ok() ? "PASS" : "FAIL") << "  "
              << check.Summary() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
