#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "cebound/mdp.hpp"
#include "cebound/spaces.hpp"

namespace oracles {

using namespace cebound;

/// Closed form on an evenly spaced line: sum of |F_mu - F_nu| times the step.
inline double sorted_cdf_w1(const Dist& mu, const Dist& nu, double step) {
  double cdf = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    cdf += mu[i] - nu[i];
    total += std::abs(cdf) * step;
  }
  return total;
}

/// Expected total cost of a Markov policy from each start state, by forward
/// propagation of the state distribution.
inline std::vector<double> forward_value(const Mdp& m, const MarkovPolicy& pi) {
  const std::size_t n = m.num_states();
  std::vector<double> out(n, 0.0);
  for (std::size_t s0 = 0; s0 < n; ++s0) {
    std::vector<double> dist(n, 0.0);
    dist[s0] = 1.0;
    for (std::size_t k = 0; k < m.horizon(); ++k) {
      std::vector<double> next(n, 0.0);
      for (std::size_t s = 0; s < n; ++s) {
        if (dist[s] == 0.0) continue;
        const std::size_t a = pi.action[k][s];
        out[s0] += dist[s] * m.cost(k, s, a);
        if (k + 1 < m.horizon()) {
          for (std::size_t t = 0; t < n; ++t) next[t] += dist[s] * m.transitions()(k, s, a, t);
        }
      }
      dist = next;
    }
  }
  return out;
}

/// Per-state optimum over every deterministic Markov policy.
inline std::vector<double> enumerate_markov_policies(const Mdp& m) {
  const std::size_t n = m.num_states(), A = m.num_actions(), T = m.horizon(), slots = n * T;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  MarkovPolicy pi;
  pi.action.assign(T, std::vector<std::size_t>(n, 0));
  std::vector<std::size_t> digits(slots, 0);
  while (true) {
    for (std::size_t i = 0; i < slots; ++i) pi.action[i / n][i % n] = digits[i];
    const auto v = forward_value(m, pi);
    for (std::size_t s = 0; s < n; ++s) best[s] = std::min(best[s], v[s]);
    std::size_t i = 0;
    while (i < slots && ++digits[i] == A) digits[i++] = 0;
    if (i == slots) break;
  }
  return best;
}

/// Best open-loop action sequence from an initial state law.
inline double open_loop_optimum(const Mdp& m, const std::vector<double>& init) {
  const std::size_t A = m.num_actions(), T = m.horizon(), n = m.num_states();
  std::size_t count = 1;
  for (std::size_t k = 0; k < T; ++k) count *= A;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<double> dist = init;
    double total = 0.0;
    std::size_t c = code;
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t a = c % A;
      c /= A;
      std::vector<double> next(n, 0.0);
      for (std::size_t s = 0; s < n; ++s) {
        total += dist[s] * m.cost(k, s, a);
        if (k + 1 < T) {
          for (std::size_t t = 0; t < n; ++t) next[t] += dist[s] * m.transitions()(k, s, a, t);
        }
      }
      dist = next;
    }
    best = std::min(best, total);
  }
  return best;
}

}  // namespace oracles
