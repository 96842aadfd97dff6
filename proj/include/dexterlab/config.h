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

// Experiment configuration and its JSON form. Every field has a default; a
// config file only lists what it overrides. Unknown keys are rejected.

#ifndef DEXTERLAB_CONFIG_H_
#define DEXTERLAB_CONFIG_H_

#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dexterlab/arm_env.h"
#include "dexterlab/curriculum.h"
#include "dexterlab/masking.h"
#include "dexterlab/ppo.h"
#include "dexterlab/rollout.h"
#include "dexterlab/target_sampler.h"
#include "json.hpp"

namespace dexterlab {

struct ExperimentConfig {
  uint64_t seed = 0;
  ArmConfig arm = ArmConfig::Default();
  PpoConfig ppo;
  RolloutConfig rollout;
  // reward_mode is exposed as a top-level key.
  CurriculumConfig curriculum;
  SamplerConfig sampler;
  bool mask_enabled = true;
  bool curriculum_enabled = true;
  int64_t total_timesteps = 5'000'000;
  std::string output_dir = "runs/default";
  int checkpoint_every = 50;  // updates

  absl::Status Validate() const;
  ActionMask Mask() const;
  EnvContext MakeEnvContext() const;
};

nlohmann::json ConfigToJson(const ExperimentConfig& config);

// Overlays `json` onto `base`. Errors name the offending key path.
absl::StatusOr<ExperimentConfig> ConfigFromJson(
    const nlohmann::json& json,
    const ExperimentConfig& base = ExperimentConfig());

std::string SerializeConfig(const ExperimentConfig& config, int indent = 2);
absl::StatusOr<ExperimentConfig> ParseConfig(const std::string& text);
absl::StatusOr<ExperimentConfig> LoadConfigFile(const std::string& path);

}  // namespace dexterlab

#endif  // DEXTERLAB_CONFIG_H_
