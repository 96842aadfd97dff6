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

#include "dexterlab/ppo.h"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "dexterlab/check.h"

namespace dexterlab {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 ln(2 pi)

}  // namespace

absl::Status PpoConfig::Validate() const {
  if (hidden != 128 && hidden != 256 && hidden != 512) {
    return absl::InvalidArgumentError("ppo.hidden must be 128, 256 or 512");
  }
  for (double v : {learning_rate, clip_range, entropy_coef, value_coef,
                   max_grad_norm, init_log_std, adam_epsilon}) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("ppo coefficients must be finite");
    }
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    return absl::InvalidArgumentError("ppo.gamma must be in [0, 1]");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    return absl::InvalidArgumentError("ppo.gae_lambda must be in [0, 1]");
  }
  if (learning_rate < 0.0 || clip_range < 0.0 || max_grad_norm <= 0.0) {
    return absl::InvalidArgumentError(
        "ppo.learning_rate and clip_range must be >= 0, max_grad_norm > 0");
  }
  if (epochs < 1 || minibatch_size < 1) {
    return absl::InvalidArgumentError(
        "ppo.epochs and ppo.minibatch_size must be >= 1");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_epsilon > 0.0)) {
    return absl::InvalidArgumentError("ppo adam settings out of range");
  }
  return absl::OkStatus();
}

void RolloutBatch::Resize(int envs, int steps, int obs_dim, int action_dim) {
  num_envs = envs;
  horizon = steps;
  const int n = envs * steps;
  observations.resize(obs_dim, n);
  actions.resize(action_dim, n);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  next_values.assign(n, 0.0);
  terminal.assign(n, 0);
  episode_end.assign(n, 0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
}

void ComputeGaeFragment(std::span<const double> rewards,
                        std::span<const double> values,
                        std::span<const double> next_values,
                        std::span<const uint8_t> terminal,
                        std::span<const uint8_t> episode_end, double gamma,
                        double lambda, std::span<double> advantages,
                        std::span<double> returns) {
  const size_t n = rewards.size();
  double next_advantage = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double bootstrap = terminal[i] ? 0.0 : next_values[i];
    const double delta = rewards[i] + gamma * bootstrap - values[i];
    const double carry = episode_end[i] ? 0.0 : next_advantage;
    advantages[i] = delta + gamma * lambda * carry;
    returns[i] = advantages[i] + values[i];
    next_advantage = advantages[i];
  }
}

void ComputeGae(RolloutBatch& batch, double gamma, double lambda) {
  const size_t h = batch.horizon;
  for (int e = 0; e < batch.num_envs; ++e) {
    const size_t off = e * h;
    ComputeGaeFragment(
        std::span<const double>(batch.rewards).subspan(off, h),
        std::span<const double>(batch.values).subspan(off, h),
        std::span<const double>(batch.next_values).subspan(off, h),
        std::span<const uint8_t>(batch.terminal).subspan(off, h),
        std::span<const uint8_t>(batch.episode_end).subspan(off, h), gamma,
        lambda, std::span<double>(batch.advantages).subspan(off, h),
        std::span<double>(batch.returns).subspan(off, h));
  }
}

void NormalizeAdvantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std_dev = std::max(std::sqrt(var / n), 1e-8);
  for (double& a : advantages) a = (a - mean) / std_dev;
}

double GaussianLogProb(std::span<const double> mean,
                       std::span<const double> log_std,
                       std::span<const double> sample, const ActionMask& mask) {
  double lp = 0.0;
  for (size_t c = 0; c < mean.size(); ++c) {
    if (!mask.enabled[c]) continue;
    const double z = (sample[c] - mean[c]) * std::exp(-log_std[c]);
    lp += -0.5 * z * z - log_std[c] - kHalfLog2Pi;
  }
  return lp;
}

ActionSample SampleAction(std::span<const double> mean,
                          std::span<const double> log_std,
                          const ActionMask& mask, std::mt19937_64& rng,
                          bool deterministic) {
  const size_t n = mean.size();
  ActionSample s;
  s.raw.resize(n);
  s.env_action.resize(n);
  if (deterministic) {
    std::copy(mean.begin(), mean.end(), s.raw.begin());
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (size_t c = 0; c < n; ++c) {
      s.raw[c] = mean[c] + std::exp(log_std[c]) * normal(rng);
    }
  }
  for (size_t c = 0; c < n; ++c) {
    s.env_action[c] = std::clamp(s.raw[c], 0.0, 1.0);
  }
  s.log_prob = GaussianLogProb(mean, log_std, s.raw, mask);
  return s;
}

template <typename Scalar>
LossStats PpoLoss(const PolicyParams<Scalar>& params,
                  const Minibatch<Scalar>& batch, const ActionMask& mask,
                  const LossCoefficients& coefs,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const NetworkShape& shape = params.shape();
  const int n = static_cast<int>(batch.observations.cols());
  const int action_dim = shape.action_dim;
  DEXTERLAB_CHECK(mask.size() == action_dim, "mask size != action_dim");
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar clip = static_cast<Scalar>(coefs.clip_range);

  MlpCache<Scalar> pcache;
  MlpCache<Scalar> vcache;
  const Matrix mean = PolicyForward(params, batch.observations, &pcache);
  const Matrix value = ValueForward(params, batch.observations, &vcache);
  const auto log_std = params.tensor(kLogStd);

  Vector inv_var(action_dim);
  for (int c = 0; c < action_dim; ++c) inv_var(c) = std::exp(-2 * log_std(c));

  // Per-sample log prob over enabled channels.
  Vector log_prob = Vector::Zero(n);
  for (int c = 0; c < action_dim; ++c) {
    if (!mask.enabled[c]) continue;
    for (int i = 0; i < n; ++i) {
      const Scalar d = batch.actions(c, i) - mean(c, i);
      log_prob(i) += Scalar(-0.5) * d * d * inv_var(c) - log_std(c) -
                     static_cast<Scalar>(kHalfLog2Pi);
    }
  }

  LossStats stats;
  Vector dlogp(n);  // d(policy loss) / d log_prob
  double policy_sum = 0.0;
  double kl_sum = 0.0;
  int clipped = 0;
  for (int i = 0; i < n; ++i) {
    const Scalar log_ratio = log_prob(i) - batch.old_log_probs(i);
    const Scalar ratio = std::exp(log_ratio);
    const Scalar adv = batch.advantages(i);
    const Scalar surr1 = ratio * adv;
    const Scalar clamped = std::clamp(ratio, Scalar(1) - clip, Scalar(1) + clip);
    const Scalar surr2 = clamped * adv;
    policy_sum += static_cast<double>(std::min(surr1, surr2));
    const bool inside = ratio >= Scalar(1) - clip && ratio <= Scalar(1) + clip;
    dlogp(i) = (surr1 <= surr2 || inside) ? -adv * ratio * inv_n : Scalar(0);
    if (!inside) ++clipped;
    kl_sum += static_cast<double>((ratio - Scalar(1)) - log_ratio);
  }
  stats.policy_loss = -policy_sum / n;
  stats.clip_fraction = static_cast<double>(clipped) / n;
  stats.approx_kl = kl_sum / n;

  double value_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d =
        static_cast<double>(value(0, i)) - static_cast<double>(batch.returns(i));
    value_sum += d * d;
  }
  stats.value_loss = value_sum / n;

  double entropy = 0.0;
  for (int c = 0; c < action_dim; ++c) {
    if (mask.enabled[c]) {
      entropy += static_cast<double>(log_std(c)) + 0.5 + kHalfLog2Pi;
    }
  }
  stats.entropy = entropy;
  stats.total = stats.policy_loss + coefs.value_coef * stats.value_loss -
                coefs.entropy_coef * stats.entropy;

  if (grad == nullptr) return stats;

  PolicyParams<Scalar> g(shape);  // gradient in the same layout
  // Policy head.
  Matrix dmean = Matrix::Zero(action_dim, n);
  auto dlog_std = g.tensor(kLogStd);
  for (int c = 0; c < action_dim; ++c) {
    if (!mask.enabled[c]) continue;
    Scalar acc = 0;
    for (int i = 0; i < n; ++i) {
      const Scalar d = batch.actions(c, i) - mean(c, i);
      dmean(c, i) = dlogp(i) * d * inv_var(c);
      acc += dlogp(i) * (d * d * inv_var(c) - Scalar(1));
    }
    dlog_std(c, 0) = acc - static_cast<Scalar>(coefs.entropy_coef);
  }

  auto backprop = [&](TensorId first, const Matrix& dout,
                      const MlpCache<Scalar>& cache) {
    const auto w1 = params.tensor(static_cast<TensorId>(first + 2));
    const auto w2 = params.tensor(static_cast<TensorId>(first + 4));
    g.tensor(static_cast<TensorId>(first + 4)).noalias() =
        dout * cache.h2.transpose();
    g.tensor(static_cast<TensorId>(first + 5)) = dout.rowwise().sum();
    Matrix dz2 = w2.transpose() * dout;
    dz2.array() *= (Scalar(1) - cache.h2.array().square());
    g.tensor(static_cast<TensorId>(first + 2)).noalias() =
        dz2 * cache.h1.transpose();
    g.tensor(static_cast<TensorId>(first + 3)) = dz2.rowwise().sum();
    Matrix dz1 = w1.transpose() * dz2;
    dz1.array() *= (Scalar(1) - cache.h1.array().square());
    g.tensor(static_cast<TensorId>(first + 0)).noalias() =
        dz1 * batch.observations.transpose();
    g.tensor(static_cast<TensorId>(first + 1)) = dz1.rowwise().sum();
  };
  backprop(kPolicyW0, dmean, pcache);

  Matrix dvalue(1, n);
  const Scalar vscale = static_cast<Scalar>(2.0 * coefs.value_coef) * inv_n;
  for (int i = 0; i < n; ++i) {
    dvalue(0, i) = vscale * (value(0, i) - batch.returns(i));
  }
  backprop(kValueW0, dvalue, vcache);

  *grad = std::move(g.flat());
  return stats;
}

template <typename Scalar>
void AdamStep(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& params,
              AdamState<Scalar>& state,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad, double lr,
              const PpoConfig& config) {
  const Scalar b1 = static_cast<Scalar>(config.adam_beta1);
  const Scalar b2 = static_cast<Scalar>(config.adam_beta2);
  ++state.step;
  state.m = b1 * state.m + (Scalar(1) - b1) * grad;
  state.v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config.adam_beta1, state.step);
  const double c2 = 1.0 - std::pow(config.adam_beta2, state.step);
  const Scalar step_size = static_cast<Scalar>(lr / c1);
  const Scalar inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(c2));
  const Scalar eps = static_cast<Scalar>(config.adam_epsilon);
  params.array() -= step_size * state.m.array() /
                    (state.v.array().sqrt() * inv_sqrt_c2 + eps);
}

absl::StatusOr<UpdateStats> PpoUpdate(PolicyParams<float>& params,
                                      AdamState<float>& adam,
                                      const RolloutBatch& batch,
                                      const PpoConfig& config,
                                      const ActionMask& mask, int64_t timestep,
                                      int64_t total_timesteps,
                                      std::mt19937_64& rng) {
  const int n = batch.size();
  UpdateStats stats;
  stats.learning_rate =
      ScheduleValue({config.learning_rate, total_timesteps}, timestep);
  stats.clip_range =
      ScheduleValue({config.clip_range, total_timesteps}, timestep);
  if (n == 0) return stats;

  std::vector<double> advantages = batch.advantages;
  NormalizeAdvantages(advantages);

  LossCoefficients coefs{stats.clip_range, config.value_coef,
                         config.entropy_coef};
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int obs_dim = static_cast<int>(batch.observations.rows());
  const int action_dim = static_cast<int>(batch.actions.rows());
  Minibatch<float> mb;
  Eigen::VectorXf grad;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += config.minibatch_size) {
      const int b = std::min(config.minibatch_size, n - start);
      mb.observations.resize(obs_dim, b);
      mb.actions.resize(action_dim, b);
      mb.old_log_probs.resize(b);
      mb.advantages.resize(b);
      mb.returns.resize(b);
      for (int j = 0; j < b; ++j) {
        const int i = order[start + j];
        mb.observations.col(j) = batch.observations.col(i);
        mb.actions.col(j) = batch.actions.col(i);
        mb.old_log_probs(j) = static_cast<float>(batch.log_probs[i]);
        mb.advantages(j) = static_cast<float>(advantages[i]);
        mb.returns(j) = static_cast<float>(batch.returns[i]);
      }
      const LossStats loss = PpoLoss(params, mb, mask, coefs, &grad);
      double sq = 0.0;
      for (Eigen::Index k = 0; k < grad.size(); ++k) {
        sq += static_cast<double>(grad(k)) * grad(k);
      }
      const double norm = std::sqrt(sq);
      if (!std::isfinite(loss.total) || !std::isfinite(norm)) {
        return absl::InternalError(absl::StrCat(
            "non-finite PPO loss or gradient at epoch ", epoch,
            ", minibatch offset ", start, ": total=", loss.total,
            " policy=", loss.policy_loss, " value=", loss.value_loss,
            " grad_norm=", norm));
      }
      if (norm > config.max_grad_norm) {
        grad *= static_cast<float>(config.max_grad_norm / norm);
      }
      AdamStep(params.flat(), adam, grad, stats.learning_rate, config);

      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      stats.clip_fraction += loss.clip_fraction;
      stats.grad_norm += norm;
      ++stats.minibatches;
    }
  }
  const double m = stats.minibatches;
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.approx_kl /= m;
  stats.clip_fraction /= m;
  stats.grad_norm /= m;
  if (!params.flat().allFinite()) {
    return absl::InternalError("non-finite parameters after PPO update");
  }
  return stats;
}

template LossStats PpoLoss(const PolicyParams<float>&, const Minibatch<float>&,
                           const ActionMask&, const LossCoefficients&,
                           Eigen::VectorXf*);
template LossStats PpoLoss(const PolicyParams<double>&,
                           const Minibatch<double>&, const ActionMask&,
                           const LossCoefficients&, Eigen::VectorXd*);
template void AdamStep(Eigen::VectorXf&, AdamState<float>&,
                       const Eigen::VectorXf&, double, const PpoConfig&);
template void AdamStep(Eigen::VectorXd&, AdamState<double>&,
                       const Eigen::VectorXd&, double, const PpoConfig&);

}  // namespace dexterlab
