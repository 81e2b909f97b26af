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

// Closed-form spike time of a single non-leaky integrate-and-fire neuron.
//
// Spike times are carried in the z-domain, z = exp(t). With tau = 1 and a
// firing threshold of 1, a neuron whose causal inputs are C fires at
//
//   z_out = sum_{i in C} w_i z_i / (sum_{i in C} w_i - 1),
//
// where C is the set of inputs that arrive before the output spike.

#ifndef TSNN_NEURON_HPP_
#define TSNN_NEURON_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsnn {

// Smallest weight-sum excess (sum w - 1) accepted as a causal set.
inline constexpr double kEpsDenom = 1e-10;
// Relative tolerance used when comparing a candidate spike against the
// neighbouring input spikes.
inline constexpr double kTieTol = 1e-12;
// Numeric value carried by neurons that never fire.
inline constexpr double kZSentinel = 1e6;

class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void Require(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}

struct SpikeValue {
  double z = kZSentinel;
  bool fired = false;

  static SpikeValue Fired(double z) { return {z, true}; }
  static SpikeValue Silent() { return {kZSentinel, false}; }

  // Spike time t = ln z; only meaningful when fired.
  double time() const { return std::log(z); }

  friend bool operator==(const SpikeValue&, const SpikeValue&) = default;
};

struct CausalSolution {
  SpikeValue z_out;
  // |C|: the first `causal_count` entries of `sorted_order` are causal.
  std::size_t causal_count = 0;
  // sum_{i in C} w_i - 1.
  double denom = 0.0;
  // Indices of the fired inputs in ascending z (stable on index).
  std::vector<std::uint32_t> sorted_order;

  std::span<const std::uint32_t> causal_set() const {
    return std::span<const std::uint32_t>(sorted_order).first(causal_count);
  }
};

struct NeuronGrad {
  std::vector<double> dz_din;
  std::vector<double> dz_dw;
};

namespace detail {

struct ScanResult {
  bool fired = false;
  std::size_t k = 0;
  double z = kZSentinel;
  double denom = 0.0;
};

inline bool WithinAbove(double candidate, double bound) {
  return candidate >= bound - kTieTol * std::max(std::abs(candidate), std::abs(bound));
}

inline bool WithinBelow(double candidate, double bound) {
  return candidate <= bound + kTieTol * std::max(std::abs(candidate), std::abs(bound));
}

// Scans causal-set sizes k = 1..m over inputs already sorted by ascending z.
// `z_sorted[r]` is the r-th earliest input and `weight_of(r)` its weight.
template <typename WeightOf>
ScanResult ScanSorted(const double* z_sorted, std::size_t m, WeightOf&& weight_of) {
  double sum_w = 0.0;
  double sum_wz = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double w = weight_of(r);
    sum_w += w;
    sum_wz += w * z_sorted[r];
    const double denom = sum_w - 1.0;
    if (denom <= kEpsDenom) continue;
    const double z = sum_wz / denom;
    if (!WithinAbove(z, z_sorted[r])) continue;
    if (r + 1 < m && !WithinBelow(z, z_sorted[r + 1])) continue;
    return {true, r + 1, z, denom};
  }
  return {};
}

// Scan that gives up as soon as the neuron provably cannot fire earlier
// than `bound` (its spike is never earlier than its latest causal input).
// Returns a silent result with k == 0 in that case; `cut` reports it.
template <typename WeightOf>
ScanResult ScanSortedBounded(const double* z_sorted, std::size_t m, double bound,
                             WeightOf&& weight_of, bool& cut) {
  cut = false;
  double sum_w = 0.0;
  double sum_wz = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (z_sorted[r] > bound) {
      cut = true;
      return {};
    }
    const double w = weight_of(r);
    sum_w += w;
    sum_wz += w * z_sorted[r];
    const double denom = sum_w - 1.0;
    if (denom <= kEpsDenom) continue;
    const double z = sum_wz / denom;
    if (!WithinAbove(z, z_sorted[r])) continue;
    if (r + 1 < m && !WithinBelow(z, z_sorted[r + 1])) continue;
    return {true, r + 1, z, denom};
  }
  return {};
}

}  // namespace detail

// Indices of fired inputs, sorted by ascending z with index tie-break.
inline std::vector<std::uint32_t> SortFired(std::span<const SpikeValue> z_in) {
  std::vector<std::uint32_t> order;
  order.reserve(z_in.size());
  for (std::size_t i = 0; i < z_in.size(); ++i) {
    if (z_in[i].fired) {
      Require(z_in[i].z > 0.0, "solve_spike: fired input with non-positive z");
      order.push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return z_in[a].z < z_in[b].z;
  });
  return order;
}

// Earliest valid causal solution of one neuron. Silent inputs never enter
// the causal set; a neuron with no valid set is returned as not fired.
inline CausalSolution solve_spike(std::span<const SpikeValue> z_in, std::span<const double> w) {
  Require(z_in.size() == w.size(), "solve_spike: input and weight lengths differ");
  Require(!z_in.empty(), "solve_spike: empty fan-in");

  CausalSolution sol;
  sol.sorted_order = SortFired(z_in);
  const std::size_t m = sol.sorted_order.size();
  std::vector<double> z_sorted(m);
  for (std::size_t r = 0; r < m; ++r) z_sorted[r] = z_in[sol.sorted_order[r]].z;

  const auto scan = detail::ScanSorted(z_sorted.data(), m,
                                       [&](std::size_t r) { return w[sol.sorted_order[r]]; });
  if (scan.fired) {
    sol.z_out = SpikeValue::Fired(scan.z);
    sol.causal_count = scan.k;
    sol.denom = scan.denom;
  }
  return sol;
}

// Analytic partials of z_out with respect to each input and weight.
// Zero outside the causal set.
inline NeuronGrad grad_spike(std::span<const SpikeValue> z_in, std::span<const double> w,
                             const CausalSolution& sol) {
  Require(z_in.size() == w.size(), "grad_spike: input and weight lengths differ");
  Require(sol.z_out.fired, "grad_spike: solution did not fire");
  Require(sol.causal_count >= 1 && sol.causal_count <= sol.sorted_order.size(),
          "grad_spike: malformed causal set");

  double sum_w = 0.0;
  for (auto i : sol.causal_set()) {
    Require(i < z_in.size() && z_in[i].fired, "grad_spike: solution does not match inputs");
    sum_w += w[i];
  }
  const double denom = sum_w - 1.0;
  Require(std::abs(denom - sol.denom) <= 1e-9 * std::max(1.0, std::abs(denom)),
          "grad_spike: stale solution (weights changed)");

  NeuronGrad g{std::vector<double>(z_in.size(), 0.0), std::vector<double>(z_in.size(), 0.0)};
  const double z_out = sol.z_out.z;
  for (auto i : sol.causal_set()) {
    g.dz_din[i] = w[i] / sol.denom;
    g.dz_dw[i] = (z_in[i].z - z_out) / sol.denom;
  }
  return g;
}

}  // namespace tsnn

#endif  // TSNN_NEURON_HPP_
