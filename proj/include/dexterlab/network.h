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

// Gaussian policy and value networks. Both are two-hidden-layer tanh MLPs of
// equal width; the policy additionally owns a state-independent log_std.
// All tensors live in one flat vector so the optimizer, gradient clipping
// and checkpointing operate on a single contiguous buffer.

#ifndef DEXTERLAB_NETWORK_H_
#define DEXTERLAB_NETWORK_H_

#include <Eigen/Dense>
#include <array>
#include <random>
#include <string>

namespace dexterlab {

struct NetworkShape {
  int obs_dim = 0;
  int hidden = 0;
  int action_dim = 0;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

enum TensorId {
  kPolicyW0 = 0,
  kPolicyB0,
  kPolicyW1,
  kPolicyB1,
  kPolicyW2,
  kPolicyB2,
  kLogStd,
  kValueW0,
  kValueB0,
  kValueW1,
  kValueB1,
  kValueW2,
  kValueB2,
  kNumTensors,
};

struct TensorInfo {
  const char* name = "";
  int rows = 0;
  int cols = 0;
  int offset = 0;

  int size() const { return rows * cols; }
};

using TensorLayout = std::array<TensorInfo, kNumTensors>;

TensorLayout MakeLayout(const NetworkShape& shape);
int LayoutSize(const TensorLayout& layout);

template <typename Scalar>
class PolicyParams {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  PolicyParams() = default;
  // All-zero parameters.
  explicit PolicyParams(const NetworkShape& shape);

  // Gaussian weights scaled by 1/sqrt(fan_in) (policy output layer x0.01),
  // zero biases, log_std = init_log_std.
  static PolicyParams Initialize(const NetworkShape& shape,
                                 std::mt19937_64& rng, double init_log_std);

  const NetworkShape& shape() const { return shape_; }
  const TensorLayout& layout() const { return layout_; }

  MatrixMap tensor(TensorId id);
  ConstMatrixMap tensor(TensorId id) const;

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  template <typename Other>
  PolicyParams<Other> Cast() const {
    PolicyParams<Other> out(shape_);
    out.flat() = flat_.template cast<Other>();
    return out;
  }

 private:
  NetworkShape shape_;
  TensorLayout layout_{};
  Vector flat_;
};

// Intermediate activations of one MLP pass, kept for backprop.
template <typename Scalar>
struct MlpCache {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h2;
};

// Columns of `obs` are observations. Returns action means (action_dim x B).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> PolicyForward(
    const PolicyParams<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& obs,
    MlpCache<Scalar>* cache = nullptr);

// Returns values (1 x B).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ValueForward(
    const PolicyParams<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& obs,
    MlpCache<Scalar>* cache = nullptr);

}  // namespace dexterlab

#endif  // DEXTERLAB_NETWORK_H_
