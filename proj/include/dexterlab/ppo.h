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

// Proximal policy optimization: Gaussian action sampling, generalized
// advantage estimation, the clipped surrogate loss with its analytic
// gradient, and the Adam update with linearly decayed lr and clip range.

#ifndef DEXTERLAB_PPO_H_
#define DEXTERLAB_PPO_H_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dexterlab/masking.h"
#include "dexterlab/network.h"

namespace dexterlab {

struct PpoConfig {
  int hidden = 256;
  double learning_rate = 6e-4;
  double clip_range = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 10;
  int minibatch_size = 256;
  double entropy_coef = 0.001;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double init_log_std = std::log(0.3);
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-5;

  absl::Status Validate() const;
};

// One rollout, env-major: transition (env, t) lives at env * horizon + t.
struct RolloutBatch {
  int num_envs = 0;
  int horizon = 0;
  Eigen::MatrixXf observations;  // obs_dim x N
  Eigen::MatrixXf actions;       // raw Gaussian samples, action_dim x N
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  // Value of the successor state: the next observation inside an episode,
  // the final observation at a timeout or at the end of the fragment.
  std::vector<double> next_values;
  // No bootstrap past this step (boundary exit or completed target).
  std::vector<uint8_t> terminal;
  // Episode boundary of any kind, including timeouts.
  std::vector<uint8_t> episode_end;
  std::vector<double> advantages;
  std::vector<double> returns;

  int size() const { return num_envs * horizon; }
  void Resize(int num_envs, int horizon, int obs_dim, int action_dim);
};

// GAE over one contiguous fragment:
//   delta_t = r_t + gamma V'_t (1 - terminal_t) - V_t
//   A_t = delta_t + gamma lambda (1 - episode_end_t) A_{t+1}
// with A past the fragment end taken as zero. Writes raw advantages and
// returns = A + V.
void ComputeGaeFragment(std::span<const double> rewards,
                        std::span<const double> values,
                        std::span<const double> next_values,
                        std::span<const uint8_t> terminal,
                        std::span<const uint8_t> episode_end, double gamma,
                        double lambda, std::span<double> advantages,
                        std::span<double> returns);

void ComputeGae(RolloutBatch& batch, double gamma, double lambda);

// In place: mean 0, standard deviation 1 (std floored at 1e-8).
void NormalizeAdvantages(std::span<double> advantages);

// Diagonal Gaussian log density over enabled channels only.
double GaussianLogProb(std::span<const double> mean,
                       std::span<const double> log_std,
                       std::span<const double> sample, const ActionMask& mask);

struct ActionSample {
  std::vector<double> raw;         // unclamped Gaussian draw
  std::vector<double> env_action;  // clamp(raw, 0, 1)
  double log_prob = 0.0;           // of `raw`, enabled channels only
};

// Draws every channel so the random stream does not depend on the mask.
// `deterministic` returns clamp(mean, 0, 1) and the density at the mean.
ActionSample SampleAction(std::span<const double> mean,
                          std::span<const double> log_std,
                          const ActionMask& mask, std::mt19937_64& rng,
                          bool deterministic = false);

template <typename Scalar>
struct Minibatch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix observations;  // obs_dim x B
  Matrix actions;       // action_dim x B
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
};

struct LossCoefficients {
  double clip_range = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.001;
};

struct LossStats {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Clipped-surrogate PPO loss
//   -mean(min(rho A, clip(rho) A)) + c_v mean((V - R)^2) - c_e H
// and, when `grad` is non-null, its gradient w.r.t. params.flat().
template <typename Scalar>
LossStats PpoLoss(const PolicyParams<Scalar>& params,
                  const Minibatch<Scalar>& batch, const ActionMask& mask,
                  const LossCoefficients& coefs,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad);

template <typename Scalar>
struct AdamState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v;
  int64_t step = 0;

  static AdamState Zeros(int size) {
    AdamState s;
    s.m = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(size);
    s.v = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(size);
    return s;
  }
};

template <typename Scalar>
void AdamStep(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& params,
              AdamState<Scalar>& state,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad, double lr,
              const PpoConfig& config);

struct UpdateStats {
  double learning_rate = 0.0;
  double clip_range = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
};

// Runs config.epochs passes of shuffled minibatches over `batch` (whose
// advantages must be filled by ComputeGae). lr and clip range follow the
// linear schedule at `timestep` of `total_timesteps`. Returns an error, before
// applying the offending step, if a loss or gradient is not finite.
absl::StatusOr<UpdateStats> PpoUpdate(PolicyParams<float>& params,
                                      AdamState<float>& adam,
                                      const RolloutBatch& batch,
                                      const PpoConfig& config,
                                      const ActionMask& mask, int64_t timestep,
                                      int64_t total_timesteps,
                                      std::mt19937_64& rng);

}  // namespace dexterlab

#endif  // DEXTERLAB_PPO_H_
