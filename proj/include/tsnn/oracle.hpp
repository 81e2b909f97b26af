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

// Event-driven reference simulation of the membrane equation
//
//   dv/dt = sum_i w_i u(t - t_i) exp(-(t - t_i) / tau),
//
// working directly on spike times. Used to cross-check the closed-form
// solver in neuron.hpp; it deliberately shares no code with it.

#ifndef TSNN_ORACLE_HPP_
#define TSNN_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tsnn/neuron.hpp"

namespace tsnn::oracle {

struct MembraneTrace {
  std::vector<double> spike_times;  // ascending
  std::vector<double> weights;
  double tau = 1.0;
  double threshold = 1.0;

  void Validate() const {
    if (spike_times.size() != weights.size())
      throw std::invalid_argument("MembraneTrace: times and weights differ in length");
    if (!std::is_sorted(spike_times.begin(), spike_times.end()))
      throw std::invalid_argument("MembraneTrace: spike times not ascending");
    if (!(tau > 0.0) || !(threshold > 0.0))
      throw std::invalid_argument("MembraneTrace: tau and threshold must be positive");
  }
};

// Builds a valid trace from unordered (time, weight) pairs.
inline MembraneTrace MakeTrace(std::vector<double> times, std::vector<double> weights,
                               double tau = 1.0, double threshold = 1.0) {
  std::vector<std::size_t> idx(times.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  MembraneTrace trace;
  trace.tau = tau;
  trace.threshold = threshold;
  for (auto i : idx) {
    trace.spike_times.push_back(times[i]);
    trace.weights.push_back(weights[i]);
  }
  return trace;
}

// v(t) from the inputs with index < active that have already arrived.
inline double PartialVoltage(const MembraneTrace& trace, std::size_t active, double t) {
  double v = 0.0;
  for (std::size_t i = 0; i < active; ++i) {
    const double dt = t - trace.spike_times[i];
    if (dt < 0.0) continue;
    v += trace.weights[i] * trace.tau * -std::expm1(-dt / trace.tau);
  }
  return v;
}

inline double membrane_voltage_at(const MembraneTrace& trace, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("membrane_voltage_at: t must be finite");
  return PartialVoltage(trace, trace.spike_times.size(), t);
}

struct CrossingOptions {
  int prescan_points = 64;
  double time_tol = 1e-12;
  int max_bisections = 200;
  // Length (in units of tau) of the final interval before falling back to
  // the asymptote comparison.
  double tail_span = 50.0;
};

namespace detail {

// Bisection on a bracket [lo, hi] with f(lo) < 0 <= f(hi).
template <typename F>
double Bisect(F&& f, double lo, double hi, const CrossingOptions& opt) {
  for (int it = 0; it < opt.max_bisections && hi - lo > opt.time_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// First crossing of f on [a, b] found by a uniform pre-scan followed by
// bisection of the first bracketing cell. Returns NaN if none.
template <typename F>
double FirstCrossingOn(F&& f, double a, double b, const CrossingOptions& opt) {
  const int n = std::max(opt.prescan_points, 1);
  double prev_t = a;
  if (f(a) >= 0.0) return a;
  for (int s = 1; s <= n; ++s) {
    const double t = (s == n) ? b : a + (b - a) * static_cast<double>(s) / n;
    if (f(t) >= 0.0) return Bisect(f, prev_t, t, opt);
    prev_t = t;
  }
  return std::nan("");
}

}  // namespace detail

inline SpikeValue simulate_first_crossing(const MembraneTrace& trace,
                                          const CrossingOptions& opt = {}) {
  trace.Validate();
  const std::size_t m = trace.spike_times.size();
  for (std::size_t k = 1; k <= m; ++k) {
    const double start = trace.spike_times[k - 1];
    auto excess = [&](double t) { return PartialVoltage(trace, k, t) - trace.threshold; };
    if (k < m) {
      const double end = trace.spike_times[k];
      if (end <= start) continue;
      const double hit = detail::FirstCrossingOn(excess, start, end, opt);
      if (!std::isnan(hit)) return SpikeValue::Fired(std::exp(hit));
      continue;
    }
    double end = start + opt.tail_span * trace.tau;
    double hit = detail::FirstCrossingOn(excess, start, end, opt);
    if (!std::isnan(hit)) return SpikeValue::Fired(std::exp(hit));
    double asymptote = 0.0;
    for (double w : trace.weights) asymptote += w * trace.tau;
    if (asymptote <= trace.threshold) return SpikeValue::Silent();
    // Slow approach to a barely supra-threshold asymptote: widen the tail.
    double lo = end;
    for (int grow = 0; grow < 64 && excess(end) < 0.0; ++grow) {
      lo = end;
      end = start + 2.0 * (end - start);
      if (end > 700.0) return SpikeValue::Silent();
    }
    if (excess(end) < 0.0) return SpikeValue::Silent();
    hit = detail::Bisect(excess, lo, end, opt);
    return SpikeValue::Fired(std::exp(hit));
  }
  return SpikeValue::Silent();
}

}  // namespace tsnn::oracle

#endif  // TSNN_ORACLE_HPP_
