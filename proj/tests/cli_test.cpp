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

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace tsnn::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome RunArgs(std::vector<std::string> args) {
  args.insert(args.begin(), "tsnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void PutBe32(std::ofstream& f, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) f.put(static_cast<char>(v >> s));
}

// Writes a small IDX pair of bar images (class k lights row band k).
void WriteBars(const fs::path& images, const fs::path& labels, std::uint32_t n) {
  std::ofstream img(images, std::ios::binary), lbl(labels, std::ios::binary);
  PutBe32(img, 2051);
  PutBe32(img, n);
  PutBe32(img, 28);
  PutBe32(img, 28);
  PutBe32(lbl, 2049);
  PutBe32(lbl, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 10);
    lbl.put(static_cast<char>(label));
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 28; ++x) img.put(static_cast<char>(y / 2 == label + 2 && x > 3 && x < 24 ? 255 : 10));
  }
}

class CliData : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tsnn_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
    WriteBars(dir_ / "train-images-idx3-ubyte", dir_ / "train-labels-idx1-ubyte", 40);
    WriteBars(dir_ / "t10k-images-idx3-ubyte", dir_ / "t10k-labels-idx1-ubyte", 20);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  std::string Dir() const { return dir_.string(); }

  fs::path dir_;
};

std::vector<nlohmann::json> ReadJsonLines(const std::string& path) {
  std::ifstream in(path);
  std::vector<nlohmann::json> rows;
  for (std::string line; std::getline(in, line);) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

TEST(Cli, Version) {
  const auto r = RunArgs({"version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("tsnn 0.1.0"), std::string::npos);
}

TEST(Cli, UnknownSubcommandOrFlagPrintsUsage) {
  auto r = RunArgs({"frobnicate"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = RunArgs({"eval", "--bogus"});
  EXPECT_NE(r.code, 0);
  r = RunArgs({});
  EXPECT_NE(r.code, 0);
}

TEST(Cli, MissingFilesNameThePath) {
  const auto r = RunArgs({"eval", "--model", "/nonexistent/m.tsnn", "--data-dir", "/nonexistent"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("/nonexistent/m.tsnn"), std::string::npos);
}

TEST(Cli, OracleCheckPasses) {
  const auto r = RunArgs({"oracle-check", "--cases", "300", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max relative deviation"), std::string::npos);
  EXPECT_NE(r.out.find("decision mismatches 0"), std::string::npos);
}

TEST(Cli, QuantizeNeedsExactlyOneMode) {
  const auto r = RunArgs({"quantize", "--model", "/nonexistent/m.tsnn", "--bits", "4"});
  EXPECT_NE(r.code, 0);
  const auto bad_bits = RunArgs({"quantize", "--model", "m", "--bits", "3", "--post-hoc"});
  EXPECT_NE(bad_bits.code, 0);
}

TEST_F(CliData, TrainEvalQuantizePerturbEndToEnd) {
  const std::string cfg = Path("run.cfg");
  std::ofstream(cfg) << "# tiny run\nepochs = 2\nbatch_size = 10\n";
  const std::string model = Path("m.tsnn"), report = Path("train.jsonl");
  auto r = RunArgs({"train", "--config", cfg, "--data-dir", Dir(), "--out", model, "--seed", "3", "--report", report});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = ReadJsonLines(report);
  ASSERT_EQ(rows.size(), 2u);
  for (const char* key : {"epoch", "lr", "loss", "test_acc", "sparsity"}) EXPECT_TRUE(rows[0].contains(key)) << key;
  EXPECT_EQ(rows[0]["lr"].get<double>(), 0.001);
  EXPECT_EQ(rows[1]["lr"].get<double>(), 0.0001);

  r = RunArgs({"eval", "--model", model, "--data-dir", Dir(), "--report", Path("eval.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy"), std::string::npos);
  EXPECT_NE(r.out.find("sparsity"), std::string::npos);
  EXPECT_NE(r.out.find("nJ"), std::string::npos);
  const auto eval_rows = ReadJsonLines(Path("eval.jsonl"));
  ASSERT_EQ(eval_rows.size(), 1u);
  EXPECT_EQ(eval_rows[0]["samples"].get<int>(), 20);

  const std::string q4 = Path("q4.tsnn");
  r = RunArgs({"quantize", "--model", model, "--bits", "4", "--post-hoc", "--out", q4});
  ASSERT_EQ(r.code, 0) << r.err;
  const Model qm = load_model(q4);
  // The file stores float32, so check the grid size rather than bit equality.
  for (const auto& m : qm.weights.layers) {
    std::set<double> levels(m.data.begin(), m.data.end());
    EXPECT_LE(levels.size(), 15u);
  }
  r = RunArgs({"eval", "--model", q4, "--data-dir", Dir()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("accuracy"), std::string::npos);

  r = RunArgs({"quantize", "--model", model, "--bits", "2", "--qat", "--out", Path("q2.tsnn"), "--data-dir", Dir(),
               "--epochs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Model q2 = load_model(Path("q2.tsnn"));
  for (const auto& m : q2.weights.layers) {
    const double top = MaxAbs(m);
    for (double v : m.data) EXPECT_TRUE(v == 0.0 || std::abs(v) == top);
  }

  r = RunArgs({"perturb", "--model", model, "--snr-db", "25", "--trials", "2", "--data-dir", Dir()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean accuracy"), std::string::npos);
}

TEST_F(CliData, TrainIsDeterministicAcrossRuns) {
  const std::string a = Path("a.tsnn"), b = Path("b.tsnn");
  ASSERT_EQ(RunArgs({"train", "--data-dir", Dir(), "--epochs", "1", "--seed", "5", "--out", a}).code, 0);
  ASSERT_EQ(RunArgs({"train", "--data-dir", Dir(), "--epochs", "1", "--seed", "5", "--out", b}).code, 0);
  EXPECT_EQ(load_model(a).weights, load_model(b).weights);
}

TEST_F(CliData, BadConfigKeyFails) {
  const std::string cfg = Path("bad.cfg");
  std::ofstream(cfg) << "epochz = 2\n";
  const auto r = RunArgs({"train", "--config", cfg, "--data-dir", Dir()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("epochz"), std::string::npos);
}

}  // namespace
}  // namespace tsnn::cli
