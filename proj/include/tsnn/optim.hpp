// Copyright 2026 The TSNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSNN_OPTIM_HPP_
#define TSNN_OPTIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsnn/network_spec.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

enum class ClipMode { kMatrix, kPerRow };

// Limits the row-normalized Frobenius norm ||G||_F / sqrt(rows) to max_norm
// by rescaling the whole matrix. kPerRow instead rescales each row whose
// own L2 norm exceeds max_norm.
inline Matrix clip_gradient(Matrix g, double max_norm = 10.0, ClipMode mode = ClipMode::kMatrix) {
  Require(max_norm > 0.0, "clip_gradient: max_norm must be positive");
  if (g.empty()) return g;
  if (mode == ClipMode::kMatrix) {
    double sq = 0.0;
    for (double v : g.data) sq += v * v;
    const double r = std::sqrt(sq) / std::sqrt(static_cast<double>(g.rows));
    if (r > max_norm) {
      const double scale = max_norm / r;
      for (double& v : g.data) v *= scale;
    }
    return g;
  }
  for (std::size_t i = 0; i < g.rows; ++i) {
    auto row = g.row(i);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
      const double scale = max_norm / norm;
      for (double& v : row) v *= scale;
    }
  }
  return g;
}

// Linear interpolation from lr_start (epoch 0) to lr_end (epoch total_epochs).
struct LrSchedule {
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  int total_epochs = 50;

  double operator()(double epoch) const {
    if (total_epochs <= 0 || epoch >= total_epochs) return lr_end;
    if (epoch <= 0) return lr_start;
    const double lr = lr_start + epoch * (lr_end - lr_start) / total_epochs;
    return std::clamp(lr, std::min(lr_start, lr_end), std::max(lr_start, lr_end));
  }
};

namespace detail {
inline void CheckSameShapes(const WeightStore& a, const WeightStore& b, const char* what) {
  Require(a.layers.size() == b.layers.size(), what);
  for (std::size_t i = 0; i < a.layers.size(); ++i)
    Require(a.layers[i].rows == b.layers[i].rows && a.layers[i].cols == b.layers[i].cols, what);
}
}  // namespace detail

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  WeightStore m;
  WeightStore v;

  explicit AdamState(const WeightStore& like) : m(ZerosLike(like)), v(ZerosLike(like)) {}

  static WeightStore ZerosLike(const WeightStore& w) {
    WeightStore z;
    for (const auto& l : w.layers) z.layers.emplace_back(l.rows, l.cols, 0.0);
    return z;
  }
};

inline void adam_step(AdamState& state, WeightStore& weights, const WeightStore& grads, double lr) {
  detail::CheckSameShapes(weights, grads, "adam_step: gradient shape mismatch");
  detail::CheckSameShapes(weights, state.m, "adam_step: state shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    auto& w = weights.layers[l].data;
    auto& m = state.m.layers[l].data;
    auto& v = state.v.layers[l].data;
    const auto& g = grads.layers[l].data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

struct SgdState {
  double momentum = 0.9;
  std::uint64_t step = 0;
  WeightStore velocity;

  explicit SgdState(const WeightStore& like, double momentum_ = 0.9)
      : momentum(momentum_), velocity(AdamState::ZerosLike(like)) {}
};

// v <- momentum * v + g; w <- w - lr * v.
inline void sgd_momentum_step(SgdState& state, WeightStore& weights, const WeightStore& grads, double lr) {
  detail::CheckSameShapes(weights, grads, "sgd_momentum_step: gradient shape mismatch");
  detail::CheckSameShapes(weights, state.velocity, "sgd_momentum_step: state shape mismatch");
  ++state.step;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    auto& w = weights.layers[l].data;
    auto& v = state.velocity.layers[l].data;
    const auto& g = grads.layers[l].data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = state.momentum * v[i] + g[i];
      w[i] -= lr * v[i];
    }
  }
}

}  // namespace tsnn

#endif  // TSNN_OPTIM_HPP_
