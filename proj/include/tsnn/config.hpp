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

// Experiment configuration and its flat `key = value` text form.

#ifndef TSNN_CONFIG_HPP_
#define TSNN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tsnn/layers.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/optim.hpp"

namespace tsnn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 10;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double momentum = 0.9;
  double K = 100.0;
  double beta = 1.0;
  double lambda = 0.001;
  double alpha = 1.0;
  EncodingMode encoding = EncodingMode::kMnist;
  double input_noise_sigma = 0.05;
  double clip_max_norm = 10.0;
  ClipMode clip_mode = ClipMode::kMatrix;
  std::uint64_t seed = 1;
  int quant_target_bits = 0;  // 0: plain float training
  std::string network = "mnist";
  std::string data_dir;
  std::size_t train_limit = 0;  // 0: whole split
  std::size_t test_limit = 0;
  double energy_per_spike = 10e-12;
  CeVariant ce_variant = CeVariant::kExcludeTarget;
  HingeReduction hinge_reduction = HingeReduction::kSum;

  LossParams Loss() const { return {K, beta, lambda, ce_variant, hinge_reduction}; }

  void Validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(lr_start > 0.0) || !(lr_end > 0.0)) fail("learning rates must be positive");
    if (K < 0.0 || lambda < 0.0) fail("K and lambda must be non-negative");
    if (!(alpha > 0.0)) fail("alpha must be positive");
    if (input_noise_sigma < 0.0) fail("input_noise_sigma must be non-negative");
    if (!(clip_max_norm > 0.0)) fail("clip_max_norm must be positive");
    if (quant_target_bits != 0 && quant_target_bits != 2 && quant_target_bits != 4 && quant_target_bits != 8 &&
        quant_target_bits != 32)
      fail("quant_target_bits must be 0, 2, 4, 8 or 32");
    if (network != "mnist" && network != "vgg16") fail("network must be mnist or vgg16");
  }
};

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// One `key = value` per line; `#` starts a comment.
inline std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = Trim(line.substr(eq + 1));
  }
  return out;
}

namespace detail {

inline double ToDouble(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config key " + key + ": not a number: " + v);
  return d;
}

inline long long ToInt(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config key " + key + ": not an integer: " + v);
  return i;
}

}  // namespace detail

inline void ApplyKeyValue(TrainConfig& c, const std::string& key, const std::string& v) {
  using detail::ToDouble;
  using detail::ToInt;
  if (key == "epochs") c.epochs = static_cast<int>(ToInt(key, v));
  else if (key == "batch_size") c.batch_size = static_cast<int>(ToInt(key, v));
  else if (key == "lr_start") c.lr_start = ToDouble(key, v);
  else if (key == "lr_end") c.lr_end = ToDouble(key, v);
  else if (key == "optimizer") {
    if (v == "adam") c.optimizer = OptimizerKind::kAdam;
    else if (v == "sgd") c.optimizer = OptimizerKind::kSgd;
    else throw ConfigError("config key optimizer: expected adam or sgd, got " + v);
  } else if (key == "momentum") c.momentum = ToDouble(key, v);
  else if (key == "K") c.K = ToDouble(key, v);
  else if (key == "beta") c.beta = ToDouble(key, v);
  else if (key == "lambda") c.lambda = ToDouble(key, v);
  else if (key == "alpha") c.alpha = ToDouble(key, v);
  else if (key == "encoding") {
    if (v == "mnist") c.encoding = EncodingMode::kMnist;
    else if (v == "cifar") c.encoding = EncodingMode::kCifar;
    else throw ConfigError("config key encoding: expected mnist or cifar, got " + v);
  } else if (key == "input_noise_sigma") c.input_noise_sigma = ToDouble(key, v);
  else if (key == "clip_max_norm") c.clip_max_norm = ToDouble(key, v);
  else if (key == "clip_mode") {
    if (v == "matrix") c.clip_mode = ClipMode::kMatrix;
    else if (v == "row") c.clip_mode = ClipMode::kPerRow;
    else throw ConfigError("config key clip_mode: expected matrix or row, got " + v);
  } else if (key == "seed") c.seed = static_cast<std::uint64_t>(ToInt(key, v));
  else if (key == "quant_target_bits") c.quant_target_bits = static_cast<int>(ToInt(key, v));
  else if (key == "network") c.network = v;
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "train_limit") c.train_limit = static_cast<std::size_t>(ToInt(key, v));
  else if (key == "test_limit") c.test_limit = static_cast<std::size_t>(ToInt(key, v));
  else if (key == "energy_per_spike") c.energy_per_spike = ToDouble(key, v);
  else if (key == "ce_variant") {
    if (v == "exclude_target") c.ce_variant = CeVariant::kExcludeTarget;
    else if (v == "all_classes") c.ce_variant = CeVariant::kAllClasses;
    else if (v == "z_softmax") c.ce_variant = CeVariant::kZSoftmax;
    else throw ConfigError("config key ce_variant: expected exclude_target, all_classes or z_softmax, got " + v);
  } else if (key == "hinge") {
    if (v == "sum") c.hinge_reduction = HingeReduction::kSum;
    else if (v == "mean") c.hinge_reduction = HingeReduction::kMean;
    else throw ConfigError("config key hinge: expected sum or mean, got " + v);
  }
  else throw ConfigError("unknown config key: " + key);
}

inline TrainConfig ParseConfig(const std::string& text, TrainConfig base = {}) {
  for (const auto& [k, v] : ParseKeyValues(text)) ApplyKeyValue(base, k, v);
  return base;
}

inline TrainConfig LoadConfigFile(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), std::move(base));
}

}  // namespace tsnn

#endif  // TSNN_CONFIG_HPP_
