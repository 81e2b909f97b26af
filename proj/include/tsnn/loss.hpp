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

// Training objective
//
//   L = ln z_c + ln sum_{i != c} 1/z_i                       (first-spike term)
//     + K sum_{layers, neurons j} max(0, beta - sum_i w_ji)  (weight-sum hinge)
//     + lambda sum w^2                                      (L2)
//
// The first-spike term is averaged over the batch; the two penalties are
// data independent and added once per step.

#ifndef TSNN_LOSS_HPP_
#define TSNN_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

#include "tsnn/network_spec.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

// First-spike cross-entropy forms.
//   kExcludeTarget: ln z_c + ln sum_{i != c} 1/z_i
//   kAllClasses:    ln z_c + ln sum_i 1/z_i (softmax cross-entropy on -ln z)
//   kZSoftmax:      z_c + ln sum_i exp(-z_i) (softmax cross-entropy on -z)
enum class CeVariant { kExcludeTarget, kAllClasses, kZSoftmax };

// kSum adds K * hinge over every row; kMean averages the hinge over the
// rows of each layer before scaling by K.
enum class HingeReduction { kSum, kMean };

struct LossParams {
  double K = 100.0;
  double beta = 1.0;
  double lambda = 0.001;
  CeVariant ce = CeVariant::kExcludeTarget;
  HingeReduction hinge = HingeReduction::kSum;
};

struct LossBreakdown {
  double total = 0.0;
  double ce_term = 0.0;
  double weight_sum_term = 0.0;
  double l2_term = 0.0;
};

struct LossGrad {
  Tensor dz;          // (N, classes)
  WeightStore dw;     // penalty gradients only
};

namespace detail {

inline void CheckLabels(const SpikeTensor& z_out, std::span<const int> labels) {
  Require(z_out.shape.size() == 2, "loss: outputs must be (N, classes)");
  Require(labels.size() == z_out.batch(), "loss: label count does not match batch");
  Require(z_out.shape[1] >= 2, "loss: need at least two classes");
  for (int c : labels)
    Require(c >= 0 && static_cast<std::size_t>(c) < z_out.shape[1], "loss: label out of range");
}

}  // namespace detail

// Per-row hinge weight for a layer with the given row count.
inline double HingeScale(const LossParams& p, std::size_t rows) {
  return p.hinge == HingeReduction::kMean ? p.K / static_cast<double>(rows) : p.K;
}

inline double PenaltyTerms(const WeightStore& weights, const LossParams& p, double* l2_out) {
  double hinge = 0.0, l2 = 0.0;
  for (const auto& m : weights.layers) {
    double layer = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double sum = 0.0;
      for (double w : m.row(r)) {
        sum += w;
        l2 += w * w;
      }
      if (sum < p.beta) layer += p.beta - sum;
    }
    if (m.rows) hinge += HingeScale(p, m.rows) * layer;
  }
  if (l2_out) *l2_out = p.lambda * l2;
  return hinge;
}

namespace detail {

// Cross-entropy of one sample; writes dL/dz into dz when non-null. Silent
// outputs keep their sentinel value and receive no gradient.
inline double SampleCe(const double* z, const std::uint8_t* fired, std::size_t classes, std::size_t c,
                       CeVariant variant, double* dz) {
  if (variant == CeVariant::kZSoftmax) {
    double lo = z[0];
    for (std::size_t i = 1; i < classes; ++i) lo = std::min(lo, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < classes; ++i) sum += std::exp(lo - z[i]);
    if (dz) {
      for (std::size_t i = 0; i < classes; ++i) {
        if (!fired[i]) continue;
        dz[i] = (i == c ? 1.0 : 0.0) - std::exp(lo - z[i]) / sum;
      }
    }
    return z[c] - lo + std::log(sum);
  }
  const bool exclude = variant == CeVariant::kExcludeTarget;
  double inv_sum = 0.0;
  for (std::size_t i = 0; i < classes; ++i)
    if (i != c || !exclude) inv_sum += 1.0 / z[i];
  if (dz) {
    for (std::size_t i = 0; i < classes; ++i) {
      if (!fired[i]) continue;
      double d = -1.0 / (z[i] * z[i] * inv_sum);
      if (i == c) d = exclude ? 1.0 / z[i] : 1.0 / z[i] + d;
      dz[i] = d;
    }
  }
  return std::log(z[c]) + std::log(inv_sum);
}

}  // namespace detail

inline LossBreakdown loss_forward(const SpikeTensor& z_out, std::span<const int> labels, const WeightStore& weights,
                                  const LossParams& p) {
  detail::CheckLabels(z_out, labels);
  const std::size_t n = z_out.batch(), classes = z_out.shape[1];
  LossBreakdown out;
  for (std::size_t s = 0; s < n; ++s)
    out.ce_term += detail::SampleCe(z_out.values.data() + s * classes, z_out.fired.data() + s * classes, classes,
                                    static_cast<std::size_t>(labels[s]), p.ce, nullptr);
  out.ce_term /= static_cast<double>(n);
  out.weight_sum_term = PenaltyTerms(weights, p, &out.l2_term);
  out.total = out.ce_term + out.weight_sum_term + out.l2_term;
  return out;
}

inline LossGrad loss_grad(const SpikeTensor& z_out, std::span<const int> labels, const WeightStore& weights,
                          const LossParams& p) {
  detail::CheckLabels(z_out, labels);
  const std::size_t n = z_out.batch(), classes = z_out.shape[1];
  LossGrad g;
  g.dz = Tensor(z_out.shape, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    double* dz = g.dz.data.data() + s * classes;
    detail::SampleCe(z_out.values.data() + s * classes, z_out.fired.data() + s * classes, classes,
                     static_cast<std::size_t>(labels[s]), p.ce, dz);
    for (std::size_t i = 0; i < classes; ++i) dz[i] *= inv_n;
  }
  g.dw.layers.reserve(weights.layers.size());
  for (const auto& m : weights.layers) {
    Matrix d(m.rows, m.cols, 0.0);
    const double scale = m.rows ? HingeScale(p, m.rows) : 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double sum = 0.0;
      for (double w : m.row(r)) sum += w;
      const double hinge = sum < p.beta ? -scale : 0.0;
      auto src = m.row(r);
      auto dst = d.row(r);
      for (std::size_t i = 0; i < m.cols; ++i) dst[i] = hinge + 2.0 * p.lambda * src[i];
    }
    g.dw.layers.push_back(std::move(d));
  }
  return g;
}

}  // namespace tsnn

#endif  // TSNN_LOSS_HPP_
