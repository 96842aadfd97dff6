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

#include "dexterlab/target_sampler.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace dexterlab {

absl::Status SamplerConfig::Validate(double surface_length) const {
  if (!(radius_min > 0.0 && radius_min <= radius_max)) {
    return absl::InvalidArgumentError(
        "sampler: need 0 < radius_min <= radius_max");
  }
  if (!(2.0 * radius_max <= surface_length)) {
    return absl::InvalidArgumentError(
        "sampler.radius_max does not fit on the surface");
  }
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError("sampler.epsilon must be positive");
  }
  if (!(fixed_radius > 0.0 && fixed_center_s - fixed_radius >= 0.0 &&
        fixed_center_s + fixed_radius <= surface_length)) {
    return absl::InvalidArgumentError(
        "sampler fixed target must lie on the surface");
  }
  if (!(s4_min_offset >= 0.0) || s4_max_redraws < 0) {
    return absl::InvalidArgumentError(
        "sampler.s4_min_offset and s4_max_redraws must be nonnegative");
  }
  if (num_cells < 1) {
    return absl::InvalidArgumentError("sampler.num_cells must be at least 1");
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    return absl::InvalidArgumentError("sampler.ema_decay must be in [0, 1)");
  }
  return absl::OkStatus();
}

CellStats CellStats::Create(int num_cells) {
  CellStats s;
  s.ema_success.assign(num_cells, 0.0);
  s.counts.assign(num_cells, 0);
  return s;
}

void UpdateCell(CellStats& stats, int cell, bool success, double decay) {
  double& e = stats.ema_success[cell];
  e = decay * e + (1.0 - decay) * (success ? 1.0 : 0.0);
  e = std::clamp(e, 0.0, 1.0);
  ++stats.counts[cell];
}

int CellIndexOf(double center_s, double surface_length, int num_cells) {
  const int cell =
      static_cast<int>(std::floor(center_s / surface_length * num_cells));
  return std::clamp(cell, 0, num_cells - 1);
}

std::vector<double> CellProbabilities(const CellStats& stats, double epsilon) {
  std::vector<double> w(stats.ema_success.size());
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = (1.0 - stats.ema_success[i]) + epsilon;
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

double CenterInCell(std::mt19937_64& rng, int cell, double radius,
                    double surface_length, int num_cells) {
  const double width = surface_length / num_cells;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double s = (cell + unit(rng)) * width;
  return std::clamp(s, radius, surface_length - radius);
}

Target DrawAdaptive(const CellStats& stats, std::mt19937_64& rng,
                    const SamplerConfig& config, double surface_length) {
  const std::vector<double> p = CellProbabilities(stats, config.epsilon);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  std::uniform_real_distribution<double> radius(config.radius_min,
                                                config.radius_max);
  Target t;
  const int cell = pick(rng);
  t.radius = radius(rng);
  t.center_s =
      CenterInCell(rng, cell, t.radius, surface_length, stats.num_cells());
  return t;
}

}  // namespace

Target SampleTarget(const CellStats& stats, Stage stage, std::mt19937_64& rng,
                    double fingertip_s, const SamplerConfig& config,
                    double extrusion, double surface_length) {
  switch (stage) {
    case Stage::kTaskComplexity:
    case Stage::kDynamicReward: {
      Target t;
      t.center_s = config.fixed_center_s;
      t.radius = config.fixed_radius;
      t.extrusion_depth = extrusion;
      return t;
    }
    case Stage::kAdaptiveSampling:
      return DrawAdaptive(stats, rng, config, surface_length);
    case Stage::kContinuousSequences:
      break;
  }
  Target t = DrawAdaptive(stats, rng, config, surface_length);
  for (int i = 0; i < config.s4_max_redraws &&
                  std::abs(t.center_s - fingertip_s) < config.s4_min_offset;
       ++i) {
    t = DrawAdaptive(stats, rng, config, surface_length);
  }
  return t;
}

Target SampleEvalTarget(std::mt19937_64& rng, double radius,
                        double surface_length, int num_cells) {
  std::uniform_int_distribution<int> pick(0, num_cells - 1);
  Target t;
  t.radius = radius;
  t.center_s = CenterInCell(rng, pick(rng), radius, surface_length, num_cells);
  return t;
}

}  // namespace dexterlab
