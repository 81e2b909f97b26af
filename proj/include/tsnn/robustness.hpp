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

// Weight quantization and additive-noise perturbation.

#ifndef TSNN_ROBUSTNESS_HPP_
#define TSNN_ROBUSTNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>

#include "tsnn/network_spec.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

inline bool IsSupportedBits(int bits) {
  return bits == 2 || bits == 4 || bits == 8 || bits == 16 || bits == 24 || bits == 32;
}

// Step of the symmetric uniform quantizer for a layer whose largest
// magnitude is w_max: w_max / (2^(bits-1) - 1). 2 bits gives {-w_max, 0, w_max}.
inline double QuantizerStep(double w_max, int bits) {
  return w_max / (std::ldexp(1.0, bits - 1) - 1.0);
}

inline double MaxAbs(const Matrix& w) {
  double m = 0.0;
  for (double v : w.data) m = std::max(m, std::abs(v));
  return m;
}

inline Matrix quantize_weights(Matrix w, int bits) {
  Require(IsSupportedBits(bits), "quantize_weights: unsupported bit width");
  if (bits == 32) return w;
  const double w_max = MaxAbs(w);
  if (w_max == 0.0) return w;
  const double delta = QuantizerStep(w_max, bits);
  for (double& v : w.data) v = std::round(v / delta) * delta;  // half away from zero
  return w;
}

inline WeightStore quantize_weights(const WeightStore& w, int bits) {
  WeightStore q;
  q.layers.reserve(w.layers.size());
  for (const auto& m : w.layers) q.layers.push_back(quantize_weights(m, bits));
  return q;
}

// Staged descent 32 -> 8 -> 4 -> 2, truncated at target_bits, with equal
// epoch shares per stage.
inline int quantization_schedule(int epoch, int total_epochs, int target_bits) {
  Require(target_bits == 2 || target_bits == 4 || target_bits == 8 || target_bits == 32,
          "quantization_schedule: target must be 2, 4, 8 or 32 bits");
  static constexpr int kStages[] = {32, 8, 4, 2};
  int n = 1;
  while (kStages[n - 1] != target_bits) ++n;
  if (total_epochs <= 0 || epoch >= total_epochs) return target_bits;
  if (epoch < 0) return kStages[0];
  const auto stage = static_cast<std::size_t>(static_cast<long long>(epoch) * n / total_epochs);
  return kStages[stage];
}

// Noise standard deviation that puts a layer at the requested SNR.
inline double NoiseSigmaForSnr(const Matrix& w, double snr_db) {
  if (w.empty()) return 0.0;
  double power = 0.0;
  for (double v : w.data) power += v * v;
  power /= static_cast<double>(w.size());
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

// Adds iid Gaussian noise per layer with variance mean(w^2) / 10^(snr/10).
// snr_db = +infinity leaves the weights unchanged.
inline WeightStore perturb_weights(const WeightStore& w, double snr_db, std::mt19937_64& rng) {
  Require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(),
          "perturb_weights: snr_db must be finite or +inf");
  WeightStore out = w;
  if (std::isinf(snr_db)) return out;
  for (auto& m : out.layers) {
    const double sigma = NoiseSigmaForSnr(m, snr_db);
    if (sigma == 0.0) continue;
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : m.data) v += noise(rng);
  }
  return out;
}

// 10 log10(signal power / error power) between a layer and its distorted copy.
inline double MeasuredSnrDb(const Matrix& clean, const Matrix& noisy) {
  Require(clean.size() == noisy.size(), "MeasuredSnrDb: size mismatch");
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    signal += clean.data[i] * clean.data[i];
    const double e = noisy.data[i] - clean.data[i];
    noise += e * e;
  }
  return 10.0 * std::log10(signal / noise);
}

}  // namespace tsnn

#endif  // TSNN_ROBUSTNESS_HPP_
