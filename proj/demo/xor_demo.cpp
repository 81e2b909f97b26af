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

// Trains a 2-8-2 temporal-coded network on XOR and prints the output spike
// times. A logical 1 spikes at t=0, a logical 0 at t=1; the class is the
// output neuron that fires first.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tsnn/tsnn.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 2;
  const tsnn::NetworkSpec spec{{2}, {tsnn::LayerSpec::FC(8), tsnn::LayerSpec::FC(2)}};

  tsnn::Dataset xor_set;
  xor_set.sample_shape = {2};
  xor_set.classes = 2;
  xor_set.images = {0, 0, 0, 1, 1, 0, 1, 1};
  xor_set.labels = {0, 1, 1, 0};
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto batch = tsnn::EncodeBatch(xor_set, all, 1.0, tsnn::EncodingMode::kMnist, 0.0, nullptr);

  tsnn::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lr_start = 1e-2;
  std::mt19937_64 rng(seed);
  tsnn::WeightStore w = tsnn::WeightStore::Init(spec, cfg.beta, rng);
  tsnn::Optimizer opt(cfg, w);

  constexpr int kSteps = 3000;
  int step = 0;
  for (; step < kSteps; ++step) {
    const auto r = tsnn::TrainStep(spec, w, w, opt, batch, xor_set.labels, cfg, cfg.lr_start);
    if (step % 500 == 0) std::printf("step %4d  loss %.4f\n", step, r.loss.total);
    if (tsnn::evaluate(spec, w, xor_set).accuracy == 1.0 && step >= 200) break;
  }

  const auto out = tsnn::network_forward(spec, w, batch).output;
  std::printf("\n a b | label | t_out[0]  t_out[1] | pred\n");
  const auto pred = tsnn::PredictFirstSpike(out);
  for (std::size_t s = 0; s < 4; ++s) {
    std::printf(" %d %d |   %d   |", static_cast<int>(xor_set.images[2 * s]), static_cast<int>(xor_set.images[2 * s + 1]),
                xor_set.labels[s]);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t i = s * 2 + k;
      if (out.fired[i])
        std::printf(" %8.4f ", std::log(out.values[i]));
      else
        std::printf("   silent ");
    }
    std::printf("|  %zu\n", pred[s].label);
  }
  const auto rep = tsnn::evaluate(spec, w, xor_set);
  std::printf("\naccuracy %.2f after %d steps, sparsity %.2f\n", rep.accuracy, step, rep.sparsity);
  return rep.accuracy == 1.0 ? 0 : 1;
}
