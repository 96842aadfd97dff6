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

#include "dexterlab/config.h"

#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "absl/strings/str_cat.h"

namespace dexterlab {

using nlohmann::json;

namespace {

absl::Status TypeError(const std::string& path, const char* expected) {
  return absl::InvalidArgumentError(
      absl::StrCat("config key '", path, "': expected ", expected));
}

absl::Status Convert(const json& j, bool& out, const std::string& path) {
  if (!j.is_boolean()) return TypeError(path, "a boolean");
  out = j.get<bool>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, double& out, const std::string& path) {
  if (!j.is_number()) return TypeError(path, "a number");
  out = j.get<double>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, std::string& out, const std::string& path) {
  if (!j.is_string()) return TypeError(path, "a string");
  out = j.get<std::string>();
  return absl::OkStatus();
}

template <typename Int>
  requires(std::is_integral_v<Int> && !std::is_same_v<Int, bool>)
absl::Status Convert(const json& j, Int& out, const std::string& path) {
  if (!j.is_number_integer()) return TypeError(path, "an integer");
  if constexpr (std::is_unsigned_v<Int>) {
    if (j.is_number_unsigned()) {
      out = j.get<Int>();
      return absl::OkStatus();
    }
    if (j.get<int64_t>() < 0) return TypeError(path, "a nonnegative integer");
  }
  out = j.get<Int>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, Interval& out, const std::string& path);
absl::Status Convert(const json& j, Vec2& out, const std::string& path);

template <typename T, size_t N>
absl::Status Convert(const json& j, std::array<T, N>& out,
                     const std::string& path) {
  if (!j.is_array() || j.size() != N) {
    return TypeError(path, absl::StrCat("an array of ", N).c_str());
  }
  for (size_t i = 0; i < N; ++i) {
    absl::Status s = Convert(j[i], out[i], absl::StrCat(path, "[", i, "]"));
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status Convert(const json& j, Interval& out, const std::string& path) {
  std::array<double, 2> v{};
  absl::Status s = Convert(j, v, path);
  if (s.ok()) out = {v[0], v[1]};
  return s;
}

absl::Status Convert(const json& j, Vec2& out, const std::string& path) {
  std::array<double, 2> v{};
  absl::Status s = Convert(j, v, path);
  if (s.ok()) out = {v[0], v[1]};
  return s;
}

// Reads keys of one JSON object, remembering which were consumed so that
// leftovers can be reported. The first error sticks.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, absl::Status& status)
      : j_(j), path_(std::move(path)), status_(status) {
    if (status_.ok() && !j_.is_object()) {
      status_ = TypeError(path_.empty() ? "<root>" : path_, "an object");
    }
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    if (!status_.ok()) return;
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    status_ = Convert(*it, out, Path(key));
  }

  template <typename Fn>
  void Object(const std::string& key, Fn&& fn) {
    if (!status_.ok()) return;
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    ObjectReader child(*it, Path(key), status_);
    fn(child);
    child.Finish();
  }

  void Finish() {
    if (!status_.ok()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        status_ = absl::InvalidArgumentError(
            absl::StrCat("unknown config key '", Path(it.key()), "'"));
        return;
      }
    }
  }

 private:
  std::string Path(const std::string& key) const {
    return path_.empty() ? key : absl::StrCat(path_, ".", key);
  }

  const json& j_;
  std::string path_;
  absl::Status& status_;
  std::set<std::string> seen_;
};

json IntervalJson(const Interval& i) { return json::array({i.lo, i.hi}); }
json Vec2Json(const Vec2& v) { return json::array({v.x, v.y}); }

json ArmToJson(const ArmConfig& a) {
  json limits = json::array();
  for (const Interval& i : a.joint_limits) limits.push_back(IntervalJson(i));
  json init = json::array();
  for (const Interval& i : a.init_range) init.push_back(IntervalJson(i));
  return {
      {"link_lengths", a.link_lengths},
      {"joint_limits", limits},
      {"moment_arms", a.moment_arms},
      {"max_force", a.max_force},
      {"joint_damping", a.joint_damping},
      {"activation_tau", a.activation_tau},
      {"physics_dt", a.physics_dt},
      {"surface",
       {{"start", Vec2Json(a.surface.start)},
        {"end", Vec2Json(a.surface.end)}}},
      {"workspace",
       {{"x_min", a.workspace.x_min},
        {"x_max", a.workspace.x_max},
        {"y_min", a.workspace.y_min},
        {"y_max", a.workspace.y_max}}},
      {"init_range", init},
  };
}

void ReadArm(ObjectReader& r, ArmConfig& a) {
  r.Read("link_lengths", a.link_lengths);
  r.Read("joint_limits", a.joint_limits);
  r.Read("moment_arms", a.moment_arms);
  r.Read("max_force", a.max_force);
  r.Read("joint_damping", a.joint_damping);
  r.Read("activation_tau", a.activation_tau);
  r.Read("physics_dt", a.physics_dt);
  r.Object("surface", [&](ObjectReader& s) {
    s.Read("start", a.surface.start);
    s.Read("end", a.surface.end);
  });
  r.Object("workspace", [&](ObjectReader& w) {
    w.Read("x_min", a.workspace.x_min);
    w.Read("x_max", a.workspace.x_max);
    w.Read("y_min", a.workspace.y_min);
    w.Read("y_max", a.workspace.y_max);
  });
  r.Read("init_range", a.init_range);
}

json PpoToJson(const PpoConfig& p) {
  return {
      {"hidden", p.hidden},
      {"learning_rate", p.learning_rate},
      {"clip_range", p.clip_range},
      {"gamma", p.gamma},
      {"gae_lambda", p.gae_lambda},
      {"epochs", p.epochs},
      {"minibatch_size", p.minibatch_size},
      {"entropy_coef", p.entropy_coef},
      {"value_coef", p.value_coef},
      {"max_grad_norm", p.max_grad_norm},
      {"init_log_std", p.init_log_std},
      {"adam_beta1", p.adam_beta1},
      {"adam_beta2", p.adam_beta2},
      {"adam_epsilon", p.adam_epsilon},
  };
}

void ReadPpo(ObjectReader& r, PpoConfig& p) {
  r.Read("hidden", p.hidden);
  r.Read("learning_rate", p.learning_rate);
  r.Read("clip_range", p.clip_range);
  r.Read("gamma", p.gamma);
  r.Read("gae_lambda", p.gae_lambda);
  r.Read("epochs", p.epochs);
  r.Read("minibatch_size", p.minibatch_size);
  r.Read("entropy_coef", p.entropy_coef);
  r.Read("value_coef", p.value_coef);
  r.Read("max_grad_norm", p.max_grad_norm);
  r.Read("init_log_std", p.init_log_std);
  r.Read("adam_beta1", p.adam_beta1);
  r.Read("adam_beta2", p.adam_beta2);
  r.Read("adam_epsilon", p.adam_epsilon);
}

json CurriculumToJson(const CurriculumConfig& c) {
  const RewardWeights& w = c.final_weights;
  return {
      {"sub_stages", c.sub_stages},
      {"advance_threshold", c.advance_threshold},
      {"window", c.window},
      {"extrusion_start", c.extrusion_start},
      {"fixed_start_stage1", c.fixed_start_stage1},
      {"final_weights",
       {{"progress", w.progress},
        {"success_bonus", w.success_bonus},
        {"wrong_press", w.wrong_press},
        {"jerk", w.jerk},
        {"effort", w.effort}}},
  };
}

void ReadCurriculum(ObjectReader& r, CurriculumConfig& c) {
  r.Read("sub_stages", c.sub_stages);
  r.Read("advance_threshold", c.advance_threshold);
  r.Read("window", c.window);
  r.Read("extrusion_start", c.extrusion_start);
  r.Read("fixed_start_stage1", c.fixed_start_stage1);
  r.Object("final_weights", [&](ObjectReader& w) {
    w.Read("progress", c.final_weights.progress);
    w.Read("success_bonus", c.final_weights.success_bonus);
    w.Read("wrong_press", c.final_weights.wrong_press);
    w.Read("jerk", c.final_weights.jerk);
    w.Read("effort", c.final_weights.effort);
  });
}

json SamplerToJson(const SamplerConfig& s) {
  return {
      {"radius_min", s.radius_min},
      {"radius_max", s.radius_max},
      {"epsilon", s.epsilon},
      {"fixed_center_s", s.fixed_center_s},
      {"fixed_radius", s.fixed_radius},
      {"s4_min_offset", s.s4_min_offset},
      {"s4_max_redraws", s.s4_max_redraws},
      {"num_cells", s.num_cells},
      {"ema_decay", s.ema_decay},
  };
}

void ReadSampler(ObjectReader& r, SamplerConfig& s) {
  r.Read("radius_min", s.radius_min);
  r.Read("radius_max", s.radius_max);
  r.Read("epsilon", s.epsilon);
  r.Read("fixed_center_s", s.fixed_center_s);
  r.Read("fixed_radius", s.fixed_radius);
  r.Read("s4_min_offset", s.s4_min_offset);
  r.Read("s4_max_redraws", s.s4_max_redraws);
  r.Read("num_cells", s.num_cells);
  r.Read("ema_decay", s.ema_decay);
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  for (absl::Status s : {arm.Validate(), ppo.Validate(), rollout.Validate(),
                         curriculum.Validate(),
                         sampler.Validate(arm.surface.Length())}) {
    if (!s.ok()) return s;
  }
  if (total_timesteps < 0) {
    return absl::InvalidArgumentError("total_timesteps must be >= 0");
  }
  if (output_dir.empty()) {
    return absl::InvalidArgumentError("output_dir must not be empty");
  }
  if (checkpoint_every < 1) {
    return absl::InvalidArgumentError("checkpoint_every must be >= 1");
  }
  return absl::OkStatus();
}

ActionMask ExperimentConfig::Mask() const {
  return mask_enabled ? ActionMask::TaskDefault() : ActionMask::AllEnabled();
}

EnvContext ExperimentConfig::MakeEnvContext() const {
  return EnvContext{arm, rollout, sampler, Mask()};
}

json ConfigToJson(const ExperimentConfig& c) {
  return {
      {"seed", c.seed},
      {"total_timesteps", c.total_timesteps},
      {"output_dir", c.output_dir},
      {"checkpoint_every", c.checkpoint_every},
      {"mask_enabled", c.mask_enabled},
      {"curriculum_enabled", c.curriculum_enabled},
      {"reward_mode", RewardModeName(c.curriculum.reward_mode)},
      {"arm", ArmToJson(c.arm)},
      {"ppo", PpoToJson(c.ppo)},
      {"rollout",
       {{"num_envs", c.rollout.num_envs},
        {"horizon", c.rollout.horizon},
        {"frameskip", c.rollout.frameskip},
        {"episode_limit", c.rollout.episode_limit}}},
      {"curriculum", CurriculumToJson(c.curriculum)},
      {"sampler", SamplerToJson(c.sampler)},
  };
}

absl::StatusOr<ExperimentConfig> ConfigFromJson(const json& j,
                                                const ExperimentConfig& base) {
  ExperimentConfig c = base;
  absl::Status status;
  std::string reward_mode = RewardModeName(c.curriculum.reward_mode);
  {
    ObjectReader r(j, "", status);
    r.Read("seed", c.seed);
    r.Read("total_timesteps", c.total_timesteps);
    r.Read("output_dir", c.output_dir);
    r.Read("checkpoint_every", c.checkpoint_every);
    r.Read("mask_enabled", c.mask_enabled);
    r.Read("curriculum_enabled", c.curriculum_enabled);
    r.Read("reward_mode", reward_mode);
    r.Object("arm", [&](ObjectReader& o) { ReadArm(o, c.arm); });
    r.Object("ppo", [&](ObjectReader& o) { ReadPpo(o, c.ppo); });
    r.Object("rollout", [&](ObjectReader& o) {
      o.Read("num_envs", c.rollout.num_envs);
      o.Read("horizon", c.rollout.horizon);
      o.Read("frameskip", c.rollout.frameskip);
      o.Read("episode_limit", c.rollout.episode_limit);
    });
    r.Object("curriculum",
             [&](ObjectReader& o) { ReadCurriculum(o, c.curriculum); });
    r.Object("sampler", [&](ObjectReader& o) { ReadSampler(o, c.sampler); });
    r.Finish();
  }
  if (!status.ok()) return status;
  absl::StatusOr<RewardMode> mode = RewardModeFromName(reward_mode);
  if (!mode.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key 'reward_mode': ", mode.status().message()));
  }
  c.curriculum.reward_mode = *mode;
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

std::string SerializeConfig(const ExperimentConfig& config, int indent) {
  return ConfigToJson(config).dump(indent) + "\n";
}

absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false,
                       /*ignore_comments=*/true);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  return ConfigFromJson(j);
}

absl::StatusOr<ExperimentConfig> LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  std::stringstream ss;
  ss << in.rdbuf();
  absl::StatusOr<ExperimentConfig> c = ParseConfig(ss.str());
  if (!c.ok()) {
    return absl::Status(c.status().code(),
                        absl::StrCat(path, ": ", c.status().message()));
  }
  return c;
}

}  // namespace dexterlab
