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

#ifndef TSNN_NETWORK_HPP_
#define TSNN_NETWORK_HPP_

#include <cstddef>
#include <limits>
#include <vector>

#include "tsnn/layers.hpp"
#include "tsnn/network_spec.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

struct SpikeStats {
  std::vector<std::size_t> fired;    // per layer, summed over the batch
  std::vector<std::size_t> neurons;  // per layer, summed over the batch

  std::size_t total_fired() const {
    std::size_t n = 0;
    for (auto f : fired) n += f;
    return n;
  }
  std::size_t total_neurons() const {
    std::size_t n = 0;
    for (auto f : neurons) n += f;
    return n;
  }
};

struct ForwardResult {
  SpikeTensor output;
  std::vector<LayerCache> caches;
  SpikeStats stats;
};

struct ForwardOptions {
  // Stop solving output neurons that can no longer be the first to fire.
  // Only the prediction is preserved; see Evaluate.
  bool early_stop = false;
};

// Reshapes a flat per-sample input into the spec's (N, C, H, W) form.
inline SpikeTensor AsNetworkInput(SpikeTensor input, const NetworkSpec& spec) {
  Shape shape{input.batch()};
  shape.insert(shape.end(), spec.input.begin(), spec.input.end());
  Require(NumElements(shape) == input.size(), "network_forward: input does not match network input shape");
  input.shape = std::move(shape);
  return input;
}

inline ForwardResult network_forward(const NetworkSpec& spec, const WeightStore& weights, const SpikeTensor& input,
                                     ForwardOptions options = {}) {
  weights.CheckAgainst(spec);
  ForwardResult result;
  SpikeTensor current = AsNetworkInput(input, spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const bool last = i + 1 == spec.layers.size();
    LayerCache cache;
    switch (l.kind) {
      case LayerKind::kSpikingFC:
        cache = forward_fc(current, weights.layers[i], options.early_stop && last);
        break;
      case LayerKind::kSpikingConv:
        Require(current.shape.size() == 4, "network_forward: SCNN after a flattening layer");
        cache = forward_conv(current, weights.layers[i], l.kernel, l.stride, l.padding);
        break;
      case LayerKind::kMaxPool:
        Require(current.shape.size() == 4, "network_forward: MP after a flattening layer");
        cache = forward_maxpool(current, l.kernel);
        break;
    }
    result.stats.fired.push_back(cache.output.fired_count());
    result.stats.neurons.push_back(cache.output.size());
    current = cache.output;
    result.caches.push_back(std::move(cache));
  }
  result.output = std::move(current);
  return result;
}

// Gradients of a scalar objective with respect to every weight, summed over
// the batch, given dL/dz of the network output.
inline WeightStore network_backward(const NetworkSpec& spec, const WeightStore& weights,
                                    const std::vector<LayerCache>& caches, const Tensor& output_grad) {
  Require(caches.size() == spec.layers.size(), "network_backward: cache count does not match spec");
  WeightStore grads;
  grads.layers.resize(spec.layers.size());
  Tensor upstream = output_grad;
  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    const bool need_input = i > 0;
    const LayerCache& cache = caches[i];
    switch (spec.layers[i].kind) {
      case LayerKind::kSpikingFC: {
        LayerGrad g = backward_fc(cache, weights.layers[i], upstream, need_input);
        grads.layers[i] = std::move(g.weight_grad);
        upstream = std::move(g.input_grad);
        break;
      }
      case LayerKind::kSpikingConv: {
        LayerGrad g = backward_conv(cache, weights.layers[i], upstream, need_input);
        grads.layers[i] = std::move(g.weight_grad);
        upstream = std::move(g.input_grad);
        break;
      }
      case LayerKind::kMaxPool:
        upstream = backward_maxpool(cache, upstream);
        break;
    }
  }
  return grads;
}

// Index of the earliest output spike per sample; silent outputs lose to any
// fired output and an all-silent row predicts class 0.
struct Prediction {
  std::size_t label = 0;
  bool any_spike = false;
};

inline std::vector<Prediction> PredictFirstSpike(const SpikeTensor& output) {
  const std::size_t n = output.batch(), d = output.sample_size();
  std::vector<Prediction> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t flat = s * d + j;
      if (output.fired[flat] && output.values[flat] < best) {
        best = output.values[flat];
        out[s] = {j, true};
      }
    }
  }
  return out;
}

}  // namespace tsnn

#endif  // TSNN_NETWORK_HPP_
