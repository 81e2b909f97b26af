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

// Random instance generators and numeric helpers shared by the tests and the
// acceptance suite.

#ifndef TSNN_TESTS_TEST_UTIL_HPP_
#define TSNN_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tsnn/tsnn.hpp"

namespace tsnn::testing {

inline double RelErr(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Relative error with an absolute floor, for gradients that may be ~0.
inline double GradErr(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct RandomNeuron {
  std::vector<double> times;
  std::vector<double> weights;

  std::vector<SpikeValue> Inputs() const {
    std::vector<SpikeValue> z;
    for (double t : times) z.push_back(SpikeValue::Fired(std::exp(t)));
    return z;
  }
};

// Fan-in uniform in [min_fan, max_fan], weights Normal(0.1, 1), spike times
// uniform in [0, 2].
inline RandomNeuron MakeRandomNeuron(std::mt19937_64& rng, int min_fan = 1, int max_fan = 64) {
  std::uniform_int_distribution<int> fan(min_fan, max_fan);
  std::normal_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> time(0.0, 2.0);
  RandomNeuron n;
  const int f = fan(rng);
  for (int i = 0; i < f; ++i) {
    n.times.push_back(time(rng));
    n.weights.push_back(weight(rng));
  }
  return n;
}

// Fired spikes with z = exp(t), t uniform in [0, t_max].
inline SpikeTensor RandomSpikes(Shape shape, std::mt19937_64& rng, double t_max = 2.0) {
  SpikeTensor t(std::move(shape));
  std::uniform_real_distribution<double> time(0.0, t_max);
  for (std::size_t i = 0; i < t.size(); ++i) t.set(i, SpikeValue::Fired(std::exp(time(rng))));
  return t;
}

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols, double mean, double stddev, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> d(mean, stddev);
  for (double& v : m.data) v = d(rng);
  return m;
}

// Fired flags and causal sets of every neuron of a layer output.
inline bool SameFiring(const SpikeTensor& a, const SpikeTensor& b) { return a.fired == b.fired; }

inline bool SameCausalStructure(const LayerCache& a, const LayerCache& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].fired != b.records[i].fired) return false;
    if (a.records[i].fired && a.records[i].causal_count != b.records[i].causal_count) return false;
  }
  return true;
}

// One FC or conv layer instance for central-difference gradient checks on the
// objective sum(upstream * output).
struct LayerFdCase {
  SpikeTensor input;
  Matrix weights;
  bool conv = false;
  std::uint32_t kernel = 1, stride = 1;
  Padding padding = Padding::kSame;

  LayerCache Forward(const SpikeTensor& in, const Matrix& w) const {
    return conv ? forward_conv(in, w, kernel, stride, padding) : forward_fc(in, w);
  }
  double Objective(const SpikeTensor& in, const Matrix& w, const Tensor& up) const {
    const auto out = Forward(in, w).output;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out.fired[i]) s += up[i] * out.values[i];
    return s;
  }
};

struct LayerFdResult {
  bool skipped = false;     // a +-h perturbation changed a causal set
  double max_error = 0.0;   // GradErr over every weight and input partial
};

inline LayerFdResult CheckLayerFd(const LayerFdCase& c, std::mt19937_64& rng, double h = 1e-5) {
  const auto cache = c.Forward(c.input, c.weights);
  Tensor up(cache.output.shape);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& v : up.data) v = nd(rng);
  const auto g = c.conv ? backward_conv(cache, c.weights, up) : backward_fc(cache, c.weights, up);
  LayerFdResult r;
  for (std::size_t i = 0; i < c.weights.size() && !r.skipped; ++i) {
    for (double d : {-h, h}) {
      Matrix w = c.weights;
      w.data[i] += d;
      if (!SameCausalStructure(cache, c.Forward(c.input, w))) r.skipped = true;
    }
  }
  for (std::size_t i = 0; i < c.input.size() && !r.skipped; ++i) {
    for (double d : {-h, h}) {
      SpikeTensor in = c.input;
      in.values[i] += d;
      if (!SameCausalStructure(cache, c.Forward(in, c.weights))) r.skipped = true;
    }
  }
  if (r.skipped) return r;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    Matrix wp = c.weights, wm = c.weights;
    wp.data[i] += h;
    wm.data[i] -= h;
    const double fd = (c.Objective(c.input, wp, up) - c.Objective(c.input, wm, up)) / (2 * h);
    r.max_error = std::max(r.max_error, GradErr(g.weight_grad.data[i], fd, 1e-3));
  }
  for (std::size_t i = 0; i < c.input.size(); ++i) {
    if (!c.input.fired[i]) continue;
    SpikeTensor ip = c.input, im = c.input;
    ip.values[i] += h;
    im.values[i] -= h;
    const double fd = (c.Objective(ip, c.weights, up) - c.Objective(im, c.weights, up)) / (2 * h);
    r.max_error = std::max(r.max_error, GradErr(g.input_grad[i], fd, 1e-3));
  }
  return r;
}

inline std::filesystem::path MnistDir() {
  if (const char* env = std::getenv("TSNN_MNIST_DIR"); env && *env) return env;
#ifdef TSNN_DEFAULT_MNIST_DIR
  return TSNN_DEFAULT_MNIST_DIR;
#else
  return "/root/data/mnist";
#endif
}

inline bool MnistAvailable() {
  const auto dir = MnistDir();
  return std::filesystem::exists(dir / "train-images-idx3-ubyte") &&
         std::filesystem::exists(dir / "train-labels-idx1-ubyte") &&
         std::filesystem::exists(dir / "t10k-images-idx3-ubyte") &&
         std::filesystem::exists(dir / "t10k-labels-idx1-ubyte");
}

}  // namespace tsnn::testing

#endif  // TSNN_TESTS_TEST_UTIL_HPP_
