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

#ifndef TSNN_TENSOR_HPP_
#define TSNN_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tsnn/neuron.hpp"

namespace tsnn {

using Shape = std::vector<std::size_t>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string ShapeString(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

// Spike values in the z-domain with a per-element fired flag. The leading
// dimension is the batch. Silent elements hold kZSentinel.
struct SpikeTensor {
  Shape shape;
  std::vector<double> values;
  std::vector<std::uint8_t> fired;

  SpikeTensor() = default;
  explicit SpikeTensor(Shape s)
      : shape(std::move(s)), values(NumElements(shape), kZSentinel), fired(NumElements(shape), 0) {}

  std::size_t size() const { return values.size(); }
  std::size_t batch() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t sample_size() const { return batch() ? size() / batch() : 0; }

  SpikeValue at(std::size_t i) const { return {values[i], fired[i] != 0}; }
  void set(std::size_t i, SpikeValue v) {
    values[i] = v.fired ? v.z : kZSentinel;
    fired[i] = v.fired ? 1 : 0;
  }

  std::size_t fired_count() const {
    return static_cast<std::size_t>(std::count(fired.begin(), fired.end(), std::uint8_t{1}));
  }

  // Dense (N, D) tensor of fired spikes.
  static SpikeTensor FromValues(Shape s, std::span<const double> z) {
    SpikeTensor t(std::move(s));
    Require(z.size() == t.size(), "SpikeTensor: value count does not match shape");
    for (std::size_t i = 0; i < z.size(); ++i) t.set(i, SpikeValue::Fired(z[i]));
    return t;
  }

  void Validate() const {
    Require(NumElements(shape) == values.size() && values.size() == fired.size(),
            "SpikeTensor: shape product does not match value count");
    for (std::size_t i = 0; i < values.size(); ++i)
      Require(!fired[i] || values[i] > 0.0, "SpikeTensor: fired value must be positive");
  }
};

// Plain dense tensor used for gradients.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(NumElements(shape), fill) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

// Row-major matrix; conv kernels are stored as (out_channels x in_channels*k*k).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
  std::span<double> row(std::size_t r) { return std::span<double>(data).subspan(r * cols, cols); }
  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace tsnn

#endif  // TSNN_TENSOR_HPP_
