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

#ifndef DEXTERLAB_TARGET_SAMPLER_H_
#define DEXTERLAB_TARGET_SAMPLER_H_

#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "dexterlab/arm_env.h"
#include "dexterlab/curriculum.h"

namespace dexterlab {

struct SamplerConfig {
  double radius_min = 0.0015;
  double radius_max = 0.007;
  // Floor added to every cell weight so mastered cells keep being visited.
  double epsilon = 0.1;
  // Target used in stages 1 and 2.
  double fixed_center_s = 0.06;
  double fixed_radius = 0.006;
  // Minimum arclength between the fingertip and the next stage-4 target.
  double s4_min_offset = 0.01;
  int s4_max_redraws = 100;
  int num_cells = 16;
  double ema_decay = 0.99;

  absl::Status Validate(double surface_length) const;
};

// Running success estimate per equal-arclength surface cell.
struct CellStats {
  std::vector<double> ema_success;
  std::vector<int64_t> counts;

  static CellStats Create(int num_cells);
  int num_cells() const { return static_cast<int>(ema_success.size()); }

  friend bool operator==(const CellStats&, const CellStats&) = default;
};

void UpdateCell(CellStats& stats, int cell, bool success, double decay);

int CellIndexOf(double center_s, double surface_length, int num_cells);

// Normalized sampling probabilities (1 - ema) + epsilon.
std::vector<double> CellProbabilities(const CellStats& stats, double epsilon);

Target SampleTarget(const CellStats& stats, Stage stage, std::mt19937_64& rng,
                    double fingertip_s, const SamplerConfig& config,
                    double extrusion, double surface_length);

// Evaluation target: uniform cell, uniform position in the cell, fixed radius.
Target SampleEvalTarget(std::mt19937_64& rng, double radius,
                        double surface_length, int num_cells);

}  // namespace dexterlab

#endif  // DEXTERLAB_TARGET_SAMPLER_H_
