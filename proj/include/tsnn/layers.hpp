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

// Spiking layers built on the closed-form neuron: fully connected,
// convolution, first-spike max-pooling and pixel-to-spike encoding.
//
// Every neuron in a layer that shares the same receptive field also shares
// the ordering of that field by spike time, so the inputs are sorted once
// per receptive field and the per-neuron work is a single prefix scan that
// stops at the causal set.

#ifndef TSNN_LAYERS_HPP_
#define TSNN_LAYERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "tsnn/network_spec.hpp"
#include "tsnn/neuron.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

enum class EncodingMode { kMnist, kCifar };

// t = alpha * (1 - p) (mnist) or alpha * p (cifar), plus optional Gaussian
// jitter, clamped to t >= 0; z = exp(t). Every pixel fires.
inline SpikeTensor encode_image(std::span<const float> pixels, Shape shape, double alpha,
                                EncodingMode mode, double noise_sigma, std::mt19937_64* rng) {
  Require(alpha > 0.0, "encode_image: alpha must be positive");
  Require(noise_sigma >= 0.0, "encode_image: noise sigma must be non-negative");
  Require(noise_sigma == 0.0 || rng != nullptr, "encode_image: noise requires an rng");
  SpikeTensor out(std::move(shape));
  Require(out.size() == pixels.size(), "encode_image: pixel count does not match shape");
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double p = pixels[i];
    Require(p >= 0.0 && p <= 1.0, "encode_image: pixel outside [0,1]");
    double t = mode == EncodingMode::kMnist ? alpha * (1.0 - p) : alpha * p;
    if (noise_sigma > 0.0) t += noise(*rng);
    out.set(i, SpikeValue::Fired(std::exp(std::max(t, 0.0))));
  }
  return out;
}

// Compact per-neuron solve record kept for the backward pass.
struct NeuronRecord {
  double denom = 0.0;
  std::uint32_t causal_count = 0;
  bool fired = false;
};

// Forward record of one layer; write-once, read by the matching backward.
struct LayerCache {
  LayerKind kind = LayerKind::kSpikingFC;
  SpikeTensor input;
  SpikeTensor output;

  // FC / conv: one record per output element.
  std::vector<NeuronRecord> records;
  // Receptive fields (one per sample for FC, per sample and output position
  // for conv): fired inputs sorted by ascending z. Field g occupies
  // [field_offsets[g], field_offsets[g+1]) of the candidate arrays.
  std::vector<std::uint32_t> field_offsets;
  std::vector<std::uint32_t> cand_input;   // flat index into input
  std::vector<std::uint32_t> cand_column;  // weight column
  std::vector<double> cand_z;

  // Max-pool: flat input index of the winning spike, or -1 if silent.
  std::vector<std::int64_t> argmin;

  std::uint32_t kernel = 1;
  std::uint32_t stride = 1;
};

namespace detail {

struct Candidate {
  double z;
  std::uint32_t input;
  std::uint32_t column;
};

inline void SortCandidates(std::vector<Candidate>& c) {
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) { return a.z < b.z; });
}

inline void AppendField(LayerCache& cache, const std::vector<Candidate>& field) {
  for (const auto& c : field) {
    cache.cand_input.push_back(c.input);
    cache.cand_column.push_back(c.column);
    cache.cand_z.push_back(c.z);
  }
  cache.field_offsets.push_back(static_cast<std::uint32_t>(cache.cand_z.size()));
}

// Solves every neuron that reads field g; neuron o uses weight row o.
// With early_stop, neurons that cannot beat the earliest spike found so far
// are left silent.
inline void SolveField(LayerCache& cache, std::size_t g, const Matrix& weights,
                       std::size_t out_base, std::size_t out_step, bool early_stop) {
  const std::size_t begin = cache.field_offsets[g];
  const std::size_t m = cache.field_offsets[g + 1] - begin;
  const double* z = cache.cand_z.data() + begin;
  const std::uint32_t* col = cache.cand_column.data() + begin;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t o = 0; o < weights.rows; ++o) {
    const double* w = weights.data.data() + o * weights.cols;
    auto weight_of = [&](std::size_t r) { return w[col[r]]; };
    ScanResult scan;
    if (early_stop) {
      bool cut = false;
      scan = ScanSortedBounded(z, m, best, weight_of, cut);
      if (scan.fired) best = std::min(best, scan.z);
    } else {
      scan = ScanSorted(z, m, weight_of);
    }
    const std::size_t out = out_base + o * out_step;
    cache.records[out] = {scan.denom, static_cast<std::uint32_t>(scan.k), scan.fired};
    cache.output.set(out, scan.fired ? SpikeValue::Fired(scan.z) : SpikeValue::Silent());
  }
}

// Chain rule through the neurons reading field g.
inline void BackwardField(const LayerCache& cache, std::size_t g, const Matrix& weights,
                          std::size_t out_base, std::size_t out_step, std::span<const double> upstream,
                          double* input_grad, Matrix& weight_grad) {
  const std::size_t begin = cache.field_offsets[g];
  const double* z = cache.cand_z.data() + begin;
  const std::uint32_t* col = cache.cand_column.data() + begin;
  const std::uint32_t* in = cache.cand_input.data() + begin;
  for (std::size_t o = 0; o < weights.rows; ++o) {
    const std::size_t out = out_base + o * out_step;
    const NeuronRecord& rec = cache.records[out];
    const double up = upstream[out];
    if (!rec.fired || up == 0.0) continue;
    const double scale = up / rec.denom;
    const double z_out = cache.output.values[out];
    const double* w = weights.data.data() + o * weights.cols;
    double* gw = weight_grad.data.data() + o * weight_grad.cols;
    for (std::size_t r = 0; r < rec.causal_count; ++r) {
      gw[col[r]] += scale * (z[r] - z_out);
      if (input_grad) input_grad[in[r]] += scale * w[col[r]];
    }
  }
}

}  // namespace detail

struct LayerGrad {
  Tensor input_grad;   // empty when not requested
  Matrix weight_grad;
};

// input (N, D_in...) flattened per sample, weights (D_out x D_in).
inline LayerCache forward_fc(const SpikeTensor& input, const Matrix& weights, bool early_stop = false) {
  const std::size_t n = input.batch();
  const std::size_t d_in = input.sample_size();
  Require(n >= 1, "forward_fc: empty batch");
  Require(weights.cols == d_in, "forward_fc: weight columns do not match input features");
  LayerCache cache;
  cache.kind = LayerKind::kSpikingFC;
  cache.input = input;
  cache.output = SpikeTensor({n, weights.rows});
  cache.records.resize(n * weights.rows);
  cache.field_offsets.push_back(0);
  std::vector<detail::Candidate> field;
  for (std::size_t s = 0; s < n; ++s) {
    field.clear();
    for (std::size_t i = 0; i < d_in; ++i) {
      const std::size_t flat = s * d_in + i;
      if (input.fired[flat]) {
        field.push_back({input.values[flat], static_cast<std::uint32_t>(flat), static_cast<std::uint32_t>(i)});
      }
    }
    detail::SortCandidates(field);
    detail::AppendField(cache, field);
    detail::SolveField(cache, s, weights, s * weights.rows, 1, early_stop);
  }
  return cache;
}

inline LayerGrad backward_fc(const LayerCache& cache, const Matrix& weights, const Tensor& upstream,
                             bool want_input_grad = true) {
  Require(cache.kind == LayerKind::kSpikingFC, "backward_fc: cache is not from forward_fc");
  Require(upstream.size() == cache.output.size(), "backward_fc: upstream shape mismatch");
  Require(weights.rows * cache.input.batch() == cache.output.size(), "backward_fc: weights do not match cache");
  LayerGrad g;
  g.weight_grad = Matrix(weights.rows, weights.cols, 0.0);
  if (want_input_grad) g.input_grad = Tensor(cache.input.shape, 0.0);
  double* in_grad = want_input_grad ? g.input_grad.data.data() : nullptr;
  for (std::size_t s = 0; s < cache.input.batch(); ++s)
    detail::BackwardField(cache, s, weights, s * weights.rows, 1, upstream.data, in_grad, g.weight_grad);
  return g;
}

// input (N, C, H, W), kernels (C_out x C*k*k). Out-of-bounds taps are silent
// inputs and never join a causal set.
inline LayerCache forward_conv(const SpikeTensor& input, const Matrix& kernels, std::uint32_t kernel,
                               std::uint32_t stride, Padding padding) {
  Require(input.shape.size() == 4, "forward_conv: input must be (N,C,H,W)");
  Require(kernel >= 1 && stride >= 1, "forward_conv: kernel and stride must be >= 1");
  const std::size_t n = input.shape[0], c_in = input.shape[1], h = input.shape[2], w = input.shape[3];
  Require(kernels.cols == c_in * kernel * kernel, "forward_conv: kernel shape does not match input channels");
  const std::size_t oh = ConvOutSize(h, kernel, stride, padding);
  const std::size_t ow = ConvOutSize(w, kernel, stride, padding);
  const std::size_t pad_y = padding == Padding::kSame ? SamePadBefore(h, oh, kernel, stride) : 0;
  const std::size_t pad_x = padding == Padding::kSame ? SamePadBefore(w, ow, kernel, stride) : 0;
  const std::size_t c_out = kernels.rows;

  LayerCache cache;
  cache.kind = LayerKind::kSpikingConv;
  cache.kernel = kernel;
  cache.stride = stride;
  cache.input = input;
  cache.output = SpikeTensor({n, c_out, oh, ow});
  cache.records.resize(cache.output.size());
  cache.field_offsets.push_back(0);

  std::vector<detail::Candidate> field;
  field.reserve(kernels.cols);
  std::size_t g = 0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++g) {
        field.clear();
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t ky = 0; ky < kernel; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad_y);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad_x);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              const std::size_t flat = ((s * c_in + c) * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix);
              if (!input.fired[flat]) continue;
              field.push_back({input.values[flat], static_cast<std::uint32_t>(flat),
                               static_cast<std::uint32_t>((c * kernel + ky) * kernel + kx)});
            }
          }
        }
        detail::SortCandidates(field);
        detail::AppendField(cache, field);
        detail::SolveField(cache, g, kernels, (s * c_out * oh + oy) * ow + ox, oh * ow, false);
      }
    }
  }
  return cache;
}

inline LayerGrad backward_conv(const LayerCache& cache, const Matrix& kernels, const Tensor& upstream,
                               bool want_input_grad = true) {
  Require(cache.kind == LayerKind::kSpikingConv, "backward_conv: cache is not from forward_conv");
  Require(upstream.size() == cache.output.size(), "backward_conv: upstream shape mismatch");
  Require(kernels.rows == cache.output.shape[1], "backward_conv: kernels do not match cache");
  const std::size_t n = cache.output.shape[0], c_out = cache.output.shape[1];
  const std::size_t oh = cache.output.shape[2], ow = cache.output.shape[3];
  LayerGrad g;
  g.weight_grad = Matrix(kernels.rows, kernels.cols, 0.0);
  if (want_input_grad) g.input_grad = Tensor(cache.input.shape, 0.0);
  double* in_grad = want_input_grad ? g.input_grad.data.data() : nullptr;
  std::size_t field = 0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox, ++field)
        detail::BackwardField(cache, field, kernels, (s * c_out * oh + oy) * ow + ox, oh * ow, upstream.data,
                              in_grad, g.weight_grad);
  return g;
}

// Non-overlapping window x window pooling that forwards the earliest spike.
inline LayerCache forward_maxpool(const SpikeTensor& input, std::uint32_t window) {
  Require(input.shape.size() == 4, "forward_maxpool: input must be (N,C,H,W)");
  Require(window >= 1, "forward_maxpool: window must be >= 1");
  const std::size_t n = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
  Require(h % window == 0 && w % window == 0, "forward_maxpool: spatial dims not divisible by window");
  const std::size_t oh = h / window, ow = w / window;
  LayerCache cache;
  cache.kind = LayerKind::kMaxPool;
  cache.kernel = window;
  cache.stride = window;
  cache.input = input;
  cache.output = SpikeTensor({n, c, oh, ow});
  cache.argmin.assign(cache.output.size(), -1);
  std::size_t out = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out) {
        std::int64_t best = -1;
        double best_z = 0.0;
        for (std::size_t ky = 0; ky < window; ++ky) {
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t flat = base + (oy * window + ky) * w + ox * window + kx;
            if (!input.fired[flat]) continue;
            if (best < 0 || input.values[flat] < best_z) {
              best = static_cast<std::int64_t>(flat);
              best_z = input.values[flat];
            }
          }
        }
        cache.argmin[out] = best;
        cache.output.set(out, best < 0 ? SpikeValue::Silent() : SpikeValue::Fired(best_z));
      }
    }
  }
  return cache;
}

inline Tensor backward_maxpool(const LayerCache& cache, const Tensor& upstream) {
  Require(cache.kind == LayerKind::kMaxPool, "backward_maxpool: cache is not from forward_maxpool");
  Require(upstream.size() == cache.output.size(), "backward_maxpool: upstream shape mismatch");
  Tensor grad(cache.input.shape, 0.0);
  for (std::size_t o = 0; o < cache.argmin.size(); ++o)
    if (cache.argmin[o] >= 0) grad[static_cast<std::size_t>(cache.argmin[o])] += upstream[o];
  return grad;
}

}  // namespace tsnn

#endif  // TSNN_LAYERS_HPP_
