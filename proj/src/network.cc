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

#include "dexterlab/network.h"

#include <cmath>

#include "dexterlab/check.h"

namespace dexterlab {

TensorLayout MakeLayout(const NetworkShape& shape) {
  const int o = shape.obs_dim;
  const int h = shape.hidden;
  const int a = shape.action_dim;
  TensorLayout layout{{
      {"policy.w0", h, o},
      {"policy.b0", h, 1},
      {"policy.w1", h, h},
      {"policy.b1", h, 1},
      {"policy.w2", a, h},
      {"policy.b2", a, 1},
      {"policy.log_std", a, 1},
      {"value.w0", h, o},
      {"value.b0", h, 1},
      {"value.w1", h, h},
      {"value.b1", h, 1},
      {"value.w2", 1, h},
      {"value.b2", 1, 1},
  }};
  int offset = 0;
  for (TensorInfo& t : layout) {
    t.offset = offset;
    offset += t.size();
  }
  return layout;
}

int LayoutSize(const TensorLayout& layout) {
  const TensorInfo& last = layout[kNumTensors - 1];
  return last.offset + last.size();
}

template <typename Scalar>
PolicyParams<Scalar>::PolicyParams(const NetworkShape& shape)
    : shape_(shape), layout_(MakeLayout(shape)) {
  flat_ = Vector::Zero(LayoutSize(layout_));
}

template <typename Scalar>
PolicyParams<Scalar> PolicyParams<Scalar>::Initialize(
    const NetworkShape& shape, std::mt19937_64& rng, double init_log_std) {
  PolicyParams p(shape);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](TensorId id, double gain) {
    MatrixMap w = p.tensor(id);
    const double scale = gain / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = static_cast<Scalar>(scale * normal(rng));
      }
    }
  };
  fill(kPolicyW0, 1.0);
  fill(kPolicyW1, 1.0);
  fill(kPolicyW2, 0.01);
  fill(kValueW0, 1.0);
  fill(kValueW1, 1.0);
  fill(kValueW2, 1.0);
  p.tensor(kLogStd).setConstant(static_cast<Scalar>(init_log_std));
  return p;
}

template <typename Scalar>
typename PolicyParams<Scalar>::MatrixMap PolicyParams<Scalar>::tensor(
    TensorId id) {
  const TensorInfo& t = layout_[id];
  return MatrixMap(flat_.data() + t.offset, t.rows, t.cols);
}

template <typename Scalar>
typename PolicyParams<Scalar>::ConstMatrixMap PolicyParams<Scalar>::tensor(
    TensorId id) const {
  const TensorInfo& t = layout_[id];
  return ConstMatrixMap(flat_.data() + t.offset, t.rows, t.cols);
}

namespace {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> MlpForward(
    const PolicyParams<Scalar>& p, TensorId first,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
    MlpCache<Scalar>* cache) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  DEXTERLAB_CHECK(x.rows() == p.shape().obs_dim,
                  "observation length does not match the network");
  const auto w0 = p.tensor(static_cast<TensorId>(first + 0));
  const auto b0 = p.tensor(static_cast<TensorId>(first + 1));
  const auto w1 = p.tensor(static_cast<TensorId>(first + 2));
  const auto b1 = p.tensor(static_cast<TensorId>(first + 3));
  const auto w2 = p.tensor(static_cast<TensorId>(first + 4));
  const auto b2 = p.tensor(static_cast<TensorId>(first + 5));

  Matrix h1 = w0 * x;
  h1.colwise() += b0.col(0);
  h1 = h1.array().tanh();
  Matrix h2 = w1 * h1;
  h2.colwise() += b1.col(0);
  h2 = h2.array().tanh();
  Matrix out = w2 * h2;
  out.colwise() += b2.col(0);
  if (cache != nullptr) {
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return out;
}

}  // namespace

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> PolicyForward(
    const PolicyParams<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& obs,
    MlpCache<Scalar>* cache) {
  return MlpForward(params, kPolicyW0, obs, cache);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ValueForward(
    const PolicyParams<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& obs,
    MlpCache<Scalar>* cache) {
  return MlpForward(params, kValueW0, obs, cache);
}

template class PolicyParams<float>;
template class PolicyParams<double>;

template Eigen::MatrixXf PolicyForward(const PolicyParams<float>&,
                                       const Eigen::MatrixXf&,
                                       MlpCache<float>*);
template Eigen::MatrixXd PolicyForward(const PolicyParams<double>&,
                                       const Eigen::MatrixXd&,
                                       MlpCache<double>*);
template Eigen::MatrixXf ValueForward(const PolicyParams<float>&,
                                      const Eigen::MatrixXf&,
                                      MlpCache<float>*);
template Eigen::MatrixXd ValueForward(const PolicyParams<double>&,
                                      const Eigen::MatrixXd&,
                                      MlpCache<double>*);

}  // namespace dexterlab
