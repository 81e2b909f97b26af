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

// Command-line front end: train, eval, quantize, perturb, oracle-check and
// version. Kept in a header so the tests can drive it in-process.

#ifndef TSNN_TOOLS_CLI_HPP_
#define TSNN_TOOLS_CLI_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsnn/tsnn.hpp"

namespace tsnn::cli {

// Appends one JSON object per line to the --report file, if any.
class Report {
 public:
  explicit Report(const std::string& path) {
    if (path.empty()) return;
    out_.emplace(path, std::ios::app);
    if (!*out_) throw std::runtime_error("cannot open report file " + path);
  }
  void Write(const nlohmann::json& record) {
    if (out_) *out_ << record.dump() << '\n' << std::flush;
  }

 private:
  std::optional<std::ofstream> out_;
};

inline nlohmann::json EvalRecord(const EvalReport& r) {
  return {{"samples", r.samples},
          {"accuracy", r.accuracy},
          {"sparsity", r.sparsity},
          {"spike_count", r.spike_count},
          {"energy_joules", r.energy_joules},
          {"energy_per_inference_joules", r.energy_per_inference()},
          {"no_spike", r.no_spike}};
}

inline void PrintEval(std::ostream& out, const std::string& label, const EvalReport& r) {
  out << std::left << std::setw(14) << label << std::right << " samples " << std::setw(6) << r.samples
      << "  accuracy " << std::fixed << std::setprecision(4) << r.accuracy << "  sparsity " << r.sparsity
      << "  energy/inference " << std::setprecision(1) << r.energy_per_inference() * 1e9 << " nJ"
      << "  no-spike " << r.no_spike << std::defaultfloat << std::setprecision(6) << "\n";
}

inline void RequireFile(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) throw std::runtime_error(std::string(what) + " not found: " + path);
}

inline Dataset LoadSplit(const std::string& dir, Split split) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("data directory not found: " + dir);
  return LoadMnistDir(dir, split);
}

struct Options {
  // train
  std::string config_path, out_path, data_dir, report_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::vector<std::string> overrides;
  // eval / quantize / perturb
  std::string model_path;
  std::size_t limit = 0;
  bool early_stop = false;
  int bits = 8;
  bool qat = false, post_hoc = false;
  double snr_db = 25.0;
  int trials = 10;
  // oracle-check
  int cases = 1000;
  std::uint64_t check_seed = 7;
};

inline int CmdTrain(const Options& o, std::ostream& out) {
  TrainConfig cfg;
  if (!o.config_path.empty()) {
    RequireFile(o.config_path, "config file");
    cfg = LoadConfigFile(o.config_path);
  }
  std::string text;
  for (const auto& kv : o.overrides) text += kv + "\n";
  cfg = ParseConfig(text, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
  if (cfg.data_dir.empty()) throw std::runtime_error("no data directory: pass --data-dir or set data_dir");
  cfg.Validate();
  const Dataset train_set = LoadSplit(cfg.data_dir, Split::kTrain);
  const Dataset test_set = LoadSplit(cfg.data_dir, Split::kTest);
  Report report(o.report_path);
  const auto t0 = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& row) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "epoch " << std::setw(3) << row.epoch << "  lr " << std::scientific << std::setprecision(3) << row.lr
        << std::fixed << "  loss " << std::setprecision(4) << row.loss << "  test_acc " << row.test_acc
        << "  sparsity " << row.sparsity << "  bits " << row.bits << "  elapsed " << std::setprecision(0) << secs
        << "s" << std::defaultfloat << std::endl;
    report.Write({{"epoch", row.epoch},
                  {"lr", row.lr},
                  {"loss", row.loss},
                  {"test_acc", row.test_acc},
                  {"sparsity", row.sparsity},
                  {"bits", row.bits}});
  };
  const TrainResult result = train(cfg, train_set, test_set, hooks);
  if (!o.out_path.empty()) {
    save_model(result.spec, result.weights, o.out_path);
    out << "saved model to " << o.out_path << "\n";
  }
  return 0;
}

inline int CmdEval(const Options& o, std::ostream& out) {
  RequireFile(o.model_path, "model file");
  const Model model = load_model(o.model_path);
  const Dataset test_set = LoadSplit(o.data_dir, Split::kTest);
  EvalOptions eo;
  eo.limit = o.limit;
  eo.early_stop = o.early_stop;
  const EvalReport rep = evaluate(model.spec, model.weights, test_set, eo);
  PrintEval(out, "eval", rep);
  Report report(o.report_path);
  auto rec = EvalRecord(rep);
  rec["model"] = o.model_path;
  report.Write(rec);
  return 0;
}

inline int CmdQuantize(const Options& o, std::ostream& out) {
  if (o.qat == o.post_hoc) throw CLI::ValidationError("quantize", "pass exactly one of --qat or --post-hoc");
  RequireFile(o.model_path, "model file");
  const Model model = load_model(o.model_path);
  WeightStore quantized;
  if (o.post_hoc) {
    quantized = quantize_weights(model.weights, o.bits);
  } else {
    TrainConfig cfg;
    if (!o.config_path.empty()) {
      RequireFile(o.config_path, "config file");
      cfg = LoadConfigFile(o.config_path);
    }
    cfg = QatFineTuneConfig(cfg, o.bits);
    std::string text;
    for (const auto& kv : o.overrides) text += kv + "\n";
    cfg = ParseConfig(text, cfg);
    if (o.epochs) cfg.epochs = *o.epochs;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
    if (cfg.data_dir.empty()) throw std::runtime_error("QAT needs training data: pass --data-dir");
    cfg.network = model.spec == SpikingVgg16() ? "vgg16" : "mnist";
    cfg.Validate();
    const Dataset train_set = LoadSplit(cfg.data_dir, Split::kTrain);
    const Dataset test_set = LoadSplit(cfg.data_dir, Split::kTest);
    TrainHooks hooks;
    hooks.initial = model.weights;
    hooks.on_epoch = [&](const EpochLog& row) {
      out << "qat epoch " << row.epoch << "  bits " << row.bits << "  test_acc " << row.test_acc << std::endl;
    };
    quantized = quantize_weights(train(cfg, train_set, test_set, hooks).weights, o.bits);
  }
  const std::string dest = o.out_path.empty() ? o.model_path : o.out_path;
  save_model(model.spec, quantized, dest);
  out << "wrote " << o.bits << "-bit " << (o.qat ? "QAT" : "post-hoc") << " model to " << dest << "\n";
  if (!o.data_dir.empty()) {
    EvalOptions eo;
    eo.limit = o.limit;
    PrintEval(out, std::to_string(o.bits) + "-bit", evaluate(model.spec, quantized, LoadSplit(o.data_dir, Split::kTest), eo));
  }
  return 0;
}

inline int CmdPerturb(const Options& o, std::ostream& out) {
  RequireFile(o.model_path, "model file");
  if (o.trials < 1) throw CLI::ValidationError("--trials", "must be >= 1");
  const Model model = load_model(o.model_path);
  const Dataset test_set = LoadSplit(o.data_dir, Split::kTest);
  EvalOptions eo;
  eo.limit = o.limit;
  const EvalReport clean = evaluate(model.spec, model.weights, test_set, eo);
  PrintEval(out, "clean", clean);
  Report report(o.report_path);
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    std::mt19937_64 rng(o.check_seed + static_cast<std::uint64_t>(t));
    const WeightStore noisy = perturb_weights(model.weights, o.snr_db, rng);
    const EvalReport rep = evaluate(model.spec, noisy, test_set, eo);
    PrintEval(out, "trial " + std::to_string(t), rep);
    sum += rep.accuracy;
    sq += rep.accuracy * rep.accuracy;
    auto rec = EvalRecord(rep);
    rec["trial"] = t;
    rec["snr_db"] = o.snr_db;
    report.Write(rec);
  }
  const double mean = sum / o.trials;
  const double sd = std::sqrt(std::max(0.0, sq / o.trials - mean * mean));
  out << "snr " << o.snr_db << " dB over " << o.trials << " trials: mean accuracy " << std::fixed
      << std::setprecision(4) << mean << " (sd " << sd << "), drop " << clean.accuracy - mean << std::defaultfloat
      << std::setprecision(6) << "\n";
  report.Write({{"snr_db", o.snr_db}, {"trials", o.trials}, {"mean_accuracy", mean}, {"sd", sd},
                {"clean_accuracy", clean.accuracy}});
  return 0;
}

// Closed-form solver against the ODE oracle on random neurons.
struct OracleCheckResult {
  int cases = 0;
  int fired = 0;
  int decision_mismatches = 0;
  double max_rel_dev = 0.0;
};

inline OracleCheckResult RunOracleCheck(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> fan(1, 64);
  std::normal_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> time(0.0, 2.0);
  OracleCheckResult r;
  for (int c = 0; c < cases; ++c) {
    const int f = fan(rng);
    std::vector<double> times(f), weights(f);
    std::vector<SpikeValue> z(f);
    for (int i = 0; i < f; ++i) {
      times[i] = time(rng);
      weights[i] = weight(rng);
      z[i] = SpikeValue::Fired(std::exp(times[i]));
    }
    const SpikeValue closed = solve_spike(z, weights).z_out;
    const SpikeValue sim = oracle::simulate_first_crossing(oracle::MakeTrace(times, weights));
    ++r.cases;
    if (closed.fired != sim.fired) {
      ++r.decision_mismatches;
      continue;
    }
    if (closed.fired) {
      ++r.fired;
      r.max_rel_dev = std::max(r.max_rel_dev, std::abs(closed.z - sim.z) / std::abs(sim.z));
    }
  }
  return r;
}

inline int CmdOracleCheck(const Options& o, std::ostream& out) {
  if (o.cases < 1) throw CLI::ValidationError("--cases", "must be >= 1");
  const auto r = RunOracleCheck(o.cases, o.check_seed);
  out << "cases " << r.cases << "  fired " << r.fired << "  decision mismatches " << r.decision_mismatches
      << "  max relative deviation " << std::scientific << std::setprecision(3) << r.max_rel_dev << std::defaultfloat
      << "\n";
  Report report(o.report_path);
  report.Write({{"cases", r.cases}, {"fired", r.fired}, {"decision_mismatches", r.decision_mismatches},
                {"max_rel_dev", r.max_rel_dev}});
  return r.decision_mismatches == 0 && r.max_rel_dev < 1e-9 ? 0 : 1;
}

inline int Run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Temporal-coded spiking network trainer", "tsnn"};
  app.require_subcommand(1);
  Options o;

  auto* train_cmd = app.add_subcommand("train", "Train a network and optionally save it");
  train_cmd->add_option("--config", o.config_path, "key = value config file");
  train_cmd->add_option("--out", o.out_path, "Model file to write");
  train_cmd->add_option("--seed", o.seed, "Random seed (overrides config)");
  train_cmd->add_option("--epochs", o.epochs, "Epoch count (overrides config)");
  train_cmd->add_option("--data-dir", o.data_dir, "Directory with MNIST IDX files");
  train_cmd->add_option("--set", o.overrides, "Extra key=value overrides");
  train_cmd->add_option("--report", o.report_path, "Append JSON records (one per line)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on the test split");
  eval_cmd->add_option("--model", o.model_path, "Model file")->required();
  eval_cmd->add_option("--data-dir", o.data_dir, "Directory with MNIST IDX files")->required();
  eval_cmd->add_option("--limit", o.limit, "Evaluate only the first N samples");
  eval_cmd->add_flag("--early-stop", o.early_stop, "Stop output solving once the winner is decided");
  eval_cmd->add_option("--report", o.report_path, "Append JSON records (one per line)");

  auto* quant_cmd = app.add_subcommand("quantize", "Quantize model weights");
  quant_cmd->add_option("--model", o.model_path, "Model file")->required();
  quant_cmd->add_option("--bits", o.bits, "Bit width")->check(CLI::IsMember({2, 4, 8, 32}))->required();
  quant_cmd->add_flag("--qat", o.qat, "Quantization-aware retraining");
  quant_cmd->add_flag("--post-hoc", o.post_hoc, "Quantize without retraining");
  quant_cmd->add_option("--out", o.out_path, "Model file to write (default: overwrite --model)");
  quant_cmd->add_option("--data-dir", o.data_dir, "MNIST directory (required for --qat; evaluates if given)");
  quant_cmd->add_option("--config", o.config_path, "Training config for --qat");
  quant_cmd->add_option("--epochs", o.epochs, "QAT epochs (overrides config)");
  quant_cmd->add_option("--seed", o.seed, "QAT seed (overrides config)");
  quant_cmd->add_option("--set", o.overrides, "Extra key=value overrides for --qat");
  quant_cmd->add_option("--limit", o.limit, "Evaluate only the first N samples");

  auto* perturb_cmd = app.add_subcommand("perturb", "Accuracy under additive weight noise");
  perturb_cmd->add_option("--model", o.model_path, "Model file")->required();
  perturb_cmd->add_option("--snr-db", o.snr_db, "Per-layer signal-to-noise ratio in dB");
  perturb_cmd->add_option("--trials", o.trials, "Number of noise draws");
  perturb_cmd->add_option("--seed", o.check_seed, "Seed of the first draw");
  perturb_cmd->add_option("--data-dir", o.data_dir, "Directory with MNIST IDX files")->required();
  perturb_cmd->add_option("--limit", o.limit, "Evaluate only the first N samples");
  perturb_cmd->add_option("--report", o.report_path, "Append JSON records (one per line)");

  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the closed-form solver with the ODE oracle");
  oracle_cmd->add_option("--cases", o.cases, "Number of random neurons");
  oracle_cmd->add_option("--seed", o.check_seed, "Random seed");
  oracle_cmd->add_option("--report", o.report_path, "Append JSON records (one per line)");

  auto* version_cmd = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) err << app.help();
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) return CmdTrain(o, out);
    if (*eval_cmd) return CmdEval(o, out);
    if (*quant_cmd) return CmdQuantize(o, out);
    if (*perturb_cmd) return CmdPerturb(o, out);
    if (*oracle_cmd) return CmdOracleCheck(o, out);
    if (*version_cmd) {
      out << "tsnn " << kVersion << " (model format " << kModelVersion << ")\n";
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tsnn::cli

#endif  // TSNN_TOOLS_CLI_HPP_
