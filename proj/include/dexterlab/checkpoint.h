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

// Versioned training checkpoints.
//
// Layout: a line-oriented text header, one `key value...` field per line in a
// fixed order, ending with `end_header`, followed by the tensors listed in
// the header as little-endian float32 in header order. Floating-point header
// fields are written as hexfloats, so load -> save reproduces the file byte
// for byte.

#ifndef DEXTERLAB_CHECKPOINT_H_
#define DEXTERLAB_CHECKPOINT_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dexterlab/config.h"
#include "dexterlab/trainer.h"

namespace dexterlab {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  TrainingState state;
};

std::string SerializeCheckpoint(const ExperimentConfig& config,
                                const TrainingState& state);
absl::StatusOr<Checkpoint> ParseCheckpoint(std::string_view bytes);

// Writes through a temporary file and renames it into place.
absl::Status SaveCheckpoint(const std::string& path,
                            const ExperimentConfig& config,
                            const TrainingState& state);
absl::StatusOr<Checkpoint> LoadCheckpoint(const std::string& path);

// Checks that a checkpoint can continue under `config`: same network shape,
// env count and sampler cell count.
absl::Status CheckResumeCompatible(const Checkpoint& checkpoint,
                                   const ExperimentConfig& config);

}  // namespace dexterlab

#endif  // DEXTERLAB_CHECKPOINT_H_
