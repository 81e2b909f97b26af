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

#include <cmath>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/optim.hpp"

namespace tsnn {
namespace {

const double kE = std::exp(1.0);

SpikeTensor Out(std::size_t n, std::size_t classes, std::vector<double> z) {
  return SpikeTensor::FromValues({n, classes}, z);
}

WeightStore OneRow(std::vector<double> w) {
  WeightStore s;
  s.layers.emplace_back(1, w.size());
  s.layers[0].data = std::move(w);
  return s;
}

TEST(LossForward, Examples) {
  const WeightStore none;
  LossParams p{0.0, 1.0, 0.0};
  const std::vector<int> c0{0};
  EXPECT_NEAR(loss_forward(Out(1, 2, {1.0, kE}), c0, none, p).ce_term, -1.0, 1e-15);
  EXPECT_NEAR(loss_forward(Out(1, 2, {kE, 1.0}), c0, none, p).ce_term, 1.0, 1e-15);

  LossParams q{100.0, 1.0, 0.001};
  const auto l = loss_forward(Out(1, 2, {1.0, kE}), c0, OneRow({0.3, 0.5}), q);
  EXPECT_NEAR(l.weight_sum_term, 20.0, 1e-12);
  EXPECT_NEAR(l.l2_term, 0.00034, 1e-15);
  EXPECT_NEAR(l.total, l.ce_term + l.weight_sum_term + l.l2_term, 1e-15);
}

TEST(LossForward, AveragesOverBatch) {
  const std::vector<int> labels{0, 0};
  const auto l = loss_forward(Out(2, 2, {1.0, kE, kE, 1.0}), labels, {}, {0.0, 1.0, 0.0});
  EXPECT_NEAR(l.ce_term, 0.0, 1e-15);
}

TEST(LossForward, RejectsBadLabels) {
  const std::vector<int> bad{2};
  EXPECT_THROW(loss_forward(Out(1, 2, {1.0, 2.0}), bad, {}, {}), ContractViolation);
  const std::vector<int> two{0, 1};
  EXPECT_THROW(loss_forward(Out(1, 2, {1.0, 2.0}), two, {}, {}), ContractViolation);
}

TEST(LossGradTest, Examples) {
  const std::vector<int> c0{0};
  const auto g = loss_grad(Out(1, 2, {1.0, kE}), c0, {}, {0.0, 1.0, 0.0});
  EXPECT_NEAR(g.dz[0], 1.0, 1e-15);
  EXPECT_NEAR(g.dz[1], -1.0 / kE, 1e-15);

  const auto h = loss_grad(Out(1, 2, {1.0, kE}), c0, OneRow({0.3, 0.5}), {100.0, 1.0, 0.0});
  EXPECT_EQ(h.dw.layers[0].data, (std::vector<double>{-100.0, -100.0}));
}

TEST(LossVariants, ZSoftmaxAndMeanHinge) {
  const std::vector<int> c0{0};
  const LossParams zs{0.0, 1.0, 0.0, CeVariant::kZSoftmax};
  const auto l = loss_forward(Out(1, 2, {1.0, 2.0}), c0, {}, zs);
  EXPECT_NEAR(l.ce_term, std::log(1.0 + std::exp(-1.0)), 1e-15);
  const auto g = loss_grad(Out(1, 2, {1.0, 2.0}), c0, {}, zs);
  const double p1 = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(g.dz[0], p1, 1e-15);
  EXPECT_NEAR(g.dz[1], -p1, 1e-15);
  // Far-apart outputs stay finite.
  EXPECT_TRUE(std::isfinite(loss_forward(Out(1, 2, {1.0, 1e6}), c0, {}, zs).ce_term));

  WeightStore w;
  w.layers.emplace_back(4, 2, 0.0);
  const LossParams mean{100.0, 1.0, 0.0, CeVariant::kExcludeTarget, HingeReduction::kMean};
  EXPECT_NEAR(loss_forward(Out(1, 2, {1.0, 2.0}), c0, w, mean).weight_sum_term, 100.0, 1e-12);
  EXPECT_EQ(loss_grad(Out(1, 2, {1.0, 2.0}), c0, w, mean).dw.layers[0].data[0], -25.0);
}

TEST(LossGradTest, SentinelOutputsGetZeroGradient) {
  SpikeTensor z({1, 3});
  z.set(0, SpikeValue::Fired(2.0));
  z.set(1, SpikeValue::Fired(3.0));
  const std::vector<int> c{2};
  const auto g = loss_grad(z, c, {}, {0.0, 1.0, 0.0});
  EXPECT_EQ(g.dz[2], 0.0);
  EXPECT_NE(g.dz[0], 0.0);
  EXPECT_TRUE(std::isfinite(loss_forward(z, c, {}, {0.0, 1.0, 0.0}).ce_term));
}

TEST(LossProperty, HingeInactiveWhenAllSumsReachBeta) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 200; ++c) {
    WeightStore w;
    w.layers.emplace_back(3, 4);
    for (double& v : w.layers[0].data) v = 0.3 + u(rng);
    LossParams p{100.0, 1.0, 0.0};
    const std::vector<int> c0{0};
    EXPECT_EQ(loss_forward(Out(1, 2, {1.0, 2.0}), c0, w, p).weight_sum_term, 0.0);
    const auto g = loss_grad(Out(1, 2, {1.0, 2.0}), c0, w, p);
    for (double d : g.dw.layers[0].data) EXPECT_EQ(d, 0.0);
  }
}

TEST(LossProperty, TimeDomainGradientIsScaleInvariant) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  for (int c = 0; c < 200; ++c) {
    std::vector<double> z(5);
    for (double& v : z) v = std::exp(t(rng));
    const std::vector<int> label{c % 5};
    for (auto variant : {CeVariant::kExcludeTarget, CeVariant::kAllClasses}) {
      const LossParams p{0.0, 1.0, 0.0, variant};
      const auto g = loss_grad(Out(1, 5, z), label, {}, p);
      auto zs = z;
      for (double& v : zs) v *= 7.0;
      const auto gs = loss_grad(Out(1, 5, zs), label, {}, p);
      for (int i = 0; i < 5; ++i) EXPECT_NEAR(g.dz[i] * z[i], gs.dz[i] * zs[i], 1e-12);
    }
  }
}

// Central differences of loss_forward against loss_grad on random triples. Each
// partial is differenced on the only term that depends on it.
TEST(LossProperty, GradMatchesFiniteDifferences) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  std::normal_distribution<double> wd(0.2, 0.3);
  constexpr double h = 1e-6;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 3, k = 4;
    std::vector<double> z(n * k);
    for (double& v : z) v = std::exp(t(rng));
    std::vector<int> labels;
    for (std::size_t s = 0; s < n; ++s) labels.push_back(static_cast<int>(rng() % k));
    WeightStore w;
    w.layers.emplace_back(3, 3);
    for (double& v : w.layers[0].data) v = wd(rng);
    for (auto variant : {CeVariant::kExcludeTarget, CeVariant::kAllClasses, CeVariant::kZSoftmax})
    for (auto hinge : {HingeReduction::kSum, HingeReduction::kMean}) {
      const LossParams p{100.0, 1.0, 0.001, variant, hinge};
      const auto g = loss_grad(Out(n, k, z), labels, w, p);
      for (std::size_t i = 0; i < z.size(); ++i) {
        auto zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double fd = (loss_forward(Out(n, k, zp), labels, w, p).ce_term -
                           loss_forward(Out(n, k, zm), labels, w, p).ce_term) / (2 * h);
        EXPECT_LT(testing::GradErr(g.dz[i], fd, 1.0), 1e-6);
      }
      for (std::size_t i = 0; i < w.layers[0].size(); ++i) {
        auto wp = w, wm = w;
        wp.layers[0].data[i] += h;
        wm.layers[0].data[i] -= h;
        const auto lp = loss_forward(Out(n, k, z), labels, wp, p), lm = loss_forward(Out(n, k, z), labels, wm, p);
        const double fd = (lp.weight_sum_term + lp.l2_term - lm.weight_sum_term - lm.l2_term) / (2 * h);
        EXPECT_LT(testing::GradErr(g.dw.layers[0].data[i], fd, 1.0), 1e-6);
      }
    }
  }
}

TEST(ClipGradient, Examples) {
  Matrix a(1, 1, 5.0);
  EXPECT_EQ(clip_gradient(a).data[0], 5.0);
  Matrix b(1, 1, 20.0);
  EXPECT_DOUBLE_EQ(clip_gradient(b).data[0], 10.0);
  Matrix c(4, 1, 40.0);
  for (double v : clip_gradient(c).data) EXPECT_DOUBLE_EQ(v, 10.0);
}

TEST(ClipGradient, PerRowMode) {
  Matrix g(2, 2);
  g.data = {30.0, 40.0, 3.0, 4.0};
  const auto r = clip_gradient(g, 10.0, ClipMode::kPerRow);
  EXPECT_NEAR(r.data[0], 6.0, 1e-12);
  EXPECT_NEAR(r.data[1], 8.0, 1e-12);
  EXPECT_EQ(r.data[2], 3.0);
  EXPECT_EQ(r.data[3], 4.0);
}

double Frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

TEST(ClipProperty, IdempotentAndNeverIncreasesNorm) {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> scale(0.1, 100.0);
  for (int c = 0; c < 1000; ++c) {
    const auto g = testing::RandomMatrix(dim(rng), dim(rng), 0.0, scale(rng), rng);
    for (auto mode : {ClipMode::kMatrix, ClipMode::kPerRow}) {
      const auto once = clip_gradient(g, 10.0, mode);
      const auto twice = clip_gradient(once, 10.0, mode);
      EXPECT_LE(Frobenius(once), Frobenius(g) * (1 + 1e-15));
      for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once.data[i], twice.data[i], 1e-12 * std::abs(once.data[i]) + 1e-300);
    }
  }
}

TEST(LrScheduleTest, EndpointsAndClamping) {
  const LrSchedule s{1e-3, 1e-4, 4};
  EXPECT_EQ(s(0), 1e-3);
  EXPECT_EQ(s(4), 1e-4);
  EXPECT_EQ(s(10), 1e-4);
  EXPECT_NEAR(s(2), 5.5e-4, 1e-18);
  EXPECT_EQ(s(-1), 1e-3);
}

WeightStore Scalar(double v) { return OneRow({v}); }

TEST(Adam, ZeroGradientLeavesWeightsAndDecaysMoments) {
  WeightStore w = Scalar(1.0);
  AdamState st(w);
  st.m.layers[0].data[0] = 0.5;
  st.v.layers[0].data[0] = 0.25;
  adam_step(st, w, Scalar(0.0), 1e-3);
  EXPECT_LT(st.m.layers[0].data[0], 0.5);
  EXPECT_LT(st.v.layers[0].data[0], 0.25);
  WeightStore w2 = Scalar(1.0);
  AdamState fresh(w2);
  adam_step(fresh, w2, Scalar(0.0), 1e-3);
  EXPECT_EQ(w2.layers[0].data[0], 1.0);
}

TEST(Adam, FirstStepAndFixedPoint) {
  WeightStore w = Scalar(0.0);
  AdamState st(w);
  adam_step(st, w, Scalar(1.0), 1e-3);
  EXPECT_NEAR(w.layers[0].data[0], -1e-3, 1e-10);
  for (int i = 0; i < 2000; ++i) {
    const double before = w.layers[0].data[0];
    adam_step(st, w, Scalar(1.0), 1e-3);
    if (i == 1999) EXPECT_NEAR(before - w.layers[0].data[0], 1e-3, 1e-9);
  }
}

TEST(Sgd, MomentumRecurrence) {
  WeightStore w = Scalar(0.0);
  SgdState st(w, 0.9);
  sgd_momentum_step(st, w, Scalar(0.0), 0.1);
  EXPECT_EQ(w.layers[0].data[0], 0.0);
  sgd_momentum_step(st, w, Scalar(1.0), 0.1);
  EXPECT_NEAR(w.layers[0].data[0], -0.1, 1e-15);
  EXPECT_EQ(st.velocity.layers[0].data[0], 1.0);
  sgd_momentum_step(st, w, Scalar(1.0), 0.1);
  EXPECT_NEAR(w.layers[0].data[0], -0.1 - 0.19, 1e-15);
}

TEST(Optimizers, DeterministicAndShapeChecked) {
  std::mt19937_64 rng(45);
  WeightStore a;
  a.layers.push_back(testing::RandomMatrix(3, 4, 0.0, 1.0, rng));
  WeightStore g;
  g.layers.push_back(testing::RandomMatrix(3, 4, 0.0, 1.0, rng));
  WeightStore b = a;
  AdamState sa(a), sb(b);
  for (int i = 0; i < 5; ++i) {
    adam_step(sa, a, g, 1e-2);
    adam_step(sb, b, g, 1e-2);
  }
  EXPECT_EQ(a, b);
  EXPECT_THROW(adam_step(sa, a, Scalar(1.0), 1e-3), ContractViolation);
}

}  // namespace
}  // namespace tsnn
