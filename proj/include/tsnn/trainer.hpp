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

// Mini-batch training, quantization-aware steps and evaluation.

#ifndef TSNN_TRAINER_HPP_
#define TSNN_TRAINER_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsnn/config.hpp"
#include "tsnn/data_io.hpp"
#include "tsnn/layers.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/network.hpp"
#include "tsnn/network_spec.hpp"
#include "tsnn/optim.hpp"
#include "tsnn/robustness.hpp"

namespace tsnn {

inline NetworkSpec NetworkByName(const std::string& name) {
  if (name == "mnist") return MnistNetwork();
  if (name == "vgg16") return SpikingVgg16();
  throw ConfigError("unknown network: " + name);
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const WeightStore& like)
      : state_(cfg.optimizer == OptimizerKind::kAdam ? State(AdamState(like)) : State(SgdState(like, cfg.momentum))) {}

  void Step(WeightStore& weights, const WeightStore& grads, double lr) {
    if (auto* adam = std::get_if<AdamState>(&state_)) {
      adam_step(*adam, weights, grads, lr);
    } else {
      sgd_momentum_step(std::get<SgdState>(state_), weights, grads, lr);
    }
  }

 private:
  using State = std::variant<AdamState, SgdState>;
  State state_;
};

// Encodes samples [indices] of a dataset into one (N, C, H, W) batch.
inline SpikeTensor EncodeBatch(const Dataset& data, std::span<const std::size_t> indices, double alpha,
                               EncodingMode mode, double noise_sigma, std::mt19937_64* rng) {
  const std::size_t per = data.sample_size();
  std::vector<float> pixels;
  pixels.reserve(indices.size() * per);
  for (auto i : indices) {
    auto img = data.image(i);
    pixels.insert(pixels.end(), img.begin(), img.end());
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), data.sample_shape.begin(), data.sample_shape.end());
  return encode_image(pixels, std::move(shape), alpha, mode, noise_sigma, rng);
}

struct StepResult {
  LossBreakdown loss;
  std::size_t fired = 0;
  std::size_t neurons = 0;
};

// One optimizer step. The forward pass, the data-term gradient and the
// penalties use `forward_weights`; clipping and the update act on `master`.
// Passing the master weights as forward weights gives a plain step;
// passing a quantized copy gives a straight-through QAT step, in which the
// weight-sum hinge sees the sums the quantized network actually fires with.
inline StepResult TrainStep(const NetworkSpec& spec, WeightStore& master, const WeightStore& forward_weights,
                            Optimizer& opt, const SpikeTensor& batch, std::span<const int> labels,
                            const TrainConfig& cfg, double lr) {
  const LossParams lp = cfg.Loss();
  ForwardResult fwd = network_forward(spec, forward_weights, batch);
  StepResult result;
  result.loss = loss_forward(fwd.output, labels, forward_weights, lp);
  result.fired = fwd.stats.total_fired();
  result.neurons = fwd.stats.total_neurons();

  LossGrad lg = loss_grad(fwd.output, labels, forward_weights, lp);
  WeightStore grads = network_backward(spec, forward_weights, fwd.caches, lg.dz);
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    auto& g = grads.layers[l];
    if (g.empty()) continue;
    const auto& pen = lg.dw.layers[l];
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += pen.data[i];
    g = clip_gradient(std::move(g), cfg.clip_max_norm, cfg.clip_mode);
  }
  opt.Step(master, grads, lr);
  return result;
}

// Straight-through quantization-aware step: quantized forward, float update.
inline StepResult qat_step(const NetworkSpec& spec, WeightStore& master, Optimizer& opt, const SpikeTensor& batch,
                           std::span<const int> labels, int bits, const TrainConfig& cfg, double lr) {
  if (bits == 32) return TrainStep(spec, master, master, opt, batch, labels, cfg, lr);
  const WeightStore quantized = quantize_weights(master, bits);
  return TrainStep(spec, master, quantized, opt, batch, labels, cfg, lr);
}

struct EvalOptions {
  double alpha = 1.0;
  EncodingMode encoding = EncodingMode::kMnist;
  double energy_per_spike = 10e-12;
  std::size_t batch_size = 50;
  bool early_stop = false;
  std::size_t limit = 0;  // 0: whole dataset
};

struct EvalReport {
  std::size_t samples = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double sparsity = 0.0;  // fraction of spiking (non-input) neurons that fired
  std::size_t spike_count = 0;
  std::size_t neuron_count = 0;
  double energy_per_spike = 10e-12;
  double energy_joules = 0.0;  // spike_count * energy_per_spike
  std::size_t no_spike = 0;    // samples whose output layer stayed silent
  std::vector<std::vector<std::size_t>> confusion;  // [label][prediction]

  double energy_per_inference() const { return samples ? energy_joules / static_cast<double>(samples) : 0.0; }
};

// Noiseless first-spike classification. Never modifies the weights.
inline EvalReport evaluate(const NetworkSpec& spec, const WeightStore& weights, const Dataset& data,
                           const EvalOptions& opt = {}) {
  Require(data.sample_shape == spec.input, "evaluate: dataset sample shape does not match network input");
  const std::size_t classes = NumElements(spec.OutputShape());
  Require(classes >= 1, "evaluate: network has no outputs");
  EvalReport rep;
  rep.energy_per_spike = opt.energy_per_spike;
  rep.confusion.assign(static_cast<std::size_t>(std::max<int>(data.classes, static_cast<int>(classes))),
                       std::vector<std::size_t>(classes, 0));
  const std::size_t n = opt.limit ? std::min(opt.limit, data.size()) : data.size();
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < n; begin += opt.batch_size) {
    const std::size_t end = std::min(n, begin + opt.batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const SpikeTensor batch = EncodeBatch(data, idx, opt.alpha, opt.encoding, 0.0, nullptr);
    const ForwardResult fwd = network_forward(spec, weights, batch, {opt.early_stop});
    rep.spike_count += fwd.stats.total_fired();
    rep.neuron_count += fwd.stats.total_neurons();
    const auto preds = PredictFirstSpike(fwd.output);
    for (std::size_t s = 0; s < preds.size(); ++s) {
      const auto label = static_cast<std::size_t>(data.labels[begin + s]);
      if (!preds[s].any_spike) ++rep.no_spike;
      if (preds[s].label == label) ++rep.correct;
      ++rep.confusion[label][preds[s].label];
    }
    rep.samples += preds.size();
  }
  rep.accuracy = rep.samples ? static_cast<double>(rep.correct) / static_cast<double>(rep.samples) : 0.0;
  rep.sparsity = rep.neuron_count ? static_cast<double>(rep.spike_count) / static_cast<double>(rep.neuron_count) : 0.0;
  rep.energy_joules = static_cast<double>(rep.spike_count) * opt.energy_per_spike;
  return rep;
}

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;       // mean total loss over the epoch's batches
  double test_acc = 0.0;
  double sparsity = 0.0;   // on the test split
  int bits = 32;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  NetworkSpec spec;
  WeightStore weights;
  std::vector<EpochLog> log;
};

// Learning-rate schedule used by train: lr_start at the first epoch and
// lr_end at the last one.
inline LrSchedule TrainingSchedule(const TrainConfig& cfg) {
  return {cfg.lr_start, cfg.lr_end, std::max(1, cfg.epochs - 1)};
}

// Quantization-aware fine-tuning of a trained float model: one epoch per
// stage of the 32 -> 8 -> 4 -> 2 schedule down to `bits`, at the schedule's
// final learning rate.
inline TrainConfig QatFineTuneConfig(TrainConfig cfg, int bits) {
  static constexpr int kStages[] = {32, 8, 4, 2};
  int stages = 1;
  while (stages < 4 && kStages[stages - 1] != bits) ++stages;
  cfg.quant_target_bits = bits;
  cfg.epochs = stages;
  cfg.lr_start = cfg.lr_end;
  return cfg;
}

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(int epoch, std::size_t batch, std::size_t batches, const StepResult&)> on_batch;
  // Starting weights; freshly initialised when empty.
  std::optional<WeightStore> initial;
};

inline TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                         const TrainHooks& hooks = {}) {
  cfg.Validate();
  TrainResult result;
  result.spec = NetworkByName(cfg.network);
  Require(train_set.sample_shape == result.spec.input, "train: training data does not match network input");
  Require(test_set.sample_shape == result.spec.input, "train: test data does not match network input");

  std::mt19937_64 rng(cfg.seed);
  result.weights = hooks.initial ? *hooks.initial : WeightStore::Init(result.spec, cfg.beta, rng);
  result.weights.CheckAgainst(result.spec);
  Optimizer opt(cfg, result.weights);
  const LrSchedule schedule = TrainingSchedule(cfg);

  const std::size_t n = cfg.train_limit ? std::min(cfg.train_limit, train_set.size()) : train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches = (n + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size);

  EvalOptions eval_opt;
  eval_opt.alpha = cfg.alpha;
  eval_opt.encoding = cfg.encoding;
  eval_opt.energy_per_spike = cfg.energy_per_spike;
  eval_opt.limit = cfg.test_limit;

  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule(epoch);
    const int bits = cfg.quant_target_bits ? quantization_schedule(epoch, cfg.epochs, cfg.quant_target_bits) : 32;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const SpikeTensor batch = EncodeBatch(train_set, idx, cfg.alpha, cfg.encoding, cfg.input_noise_sigma, &rng);
      labels.clear();
      for (auto i : idx) labels.push_back(train_set.labels[i]);
      const StepResult step = qat_step(result.spec, result.weights, opt, batch, labels, bits, cfg, lr);
      loss_sum += step.loss.total;
      if (hooks.on_batch) hooks.on_batch(epoch, b, batches, step);
    }
    const WeightStore eval_weights = bits == 32 ? result.weights : quantize_weights(result.weights, bits);
    const EvalReport rep = evaluate(result.spec, eval_weights, test_set, eval_opt);
    EpochLog row{epoch, lr, loss_sum / static_cast<double>(batches), rep.accuracy, rep.sparsity, bits};
    result.log.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  return result;
}

}  // namespace tsnn

#endif  // TSNN_TRAINER_HPP_
