#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cebound/mdp.hpp"
#include "cebound/pomdp.hpp"
#include "cebound/spaces.hpp"

namespace fixtures {

using namespace cebound;

inline double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

inline Dist random_dist(std::mt19937_64& gen, std::size_t n, double sparsity = 0.0) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = uniform01(gen) < sparsity ? 0.0 : uniform01(gen);
    total += x;
  }
  if (total == 0.0) w[gen() % n] = 1.0;
  return Dist::normalized(w);
}

/// Shortest-path closure of random edge weights in (0.1, 2).
inline MetricSpace random_metric(std::mt19937_64& gen, std::size_t n) {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = 0.1 + 1.9 * uniform01(gen);
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, m) + d(m, j));
    }
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  return MetricSpace(labels, d);
}

inline Mdp random_mdp(std::mt19937_64& gen, std::size_t n, std::size_t actions, std::size_t horizon) {
  MetricSpace space = random_metric(gen, n);
  std::vector<double> kernel;
  for (std::size_t k = 0; k + 1 < horizon; ++k) {
    for (std::size_t s = 0; s < n * actions; ++s) {
      const Dist row = random_dist(gen, n, 0.3);
      kernel.insert(kernel.end(), row.mass().begin(), row.mass().end());
    }
  }
  std::vector<double> costs(horizon * n * actions);
  for (auto& c : costs) c = uniform01(gen);
  return Mdp(space, actions, Kernel(horizon - 1, n, actions, n, kernel), CostTable(horizon, n, actions, costs),
             horizon);
}

/// Two hidden states at distance 1, noisy binary observation, T = 2.
/// Reference values are in tests/oracles/frozen_values.py.
inline Pomdp two_state_pomdp() {
  const double p0[2] = {0.6, 0.4};
  const double obs[2][2] = {{0.8, 0.2}, {0.3, 0.7}};
  const double move[2][2][2] = {{{0.9, 0.1}, {0.1, 0.9}}, {{0.2, 0.8}, {0.8, 0.2}}};
  std::vector<double> init;
  for (int s = 0; s < 2; ++s) {
    for (int y = 0; y < 2; ++y) init.push_back(p0[s] * obs[s][y]);
  }
  std::vector<double> kernel;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      for (int s2 = 0; s2 < 2; ++s2) {
        for (int y = 0; y < 2; ++y) kernel.push_back(move[a][s][s2] * obs[s2][y]);
      }
    }
  }
  std::vector<double> costs = {0.0, 1.0, 2.0, 0.5, 0.0, 0.3, 1.0, 0.2};
  return Pomdp(MetricSpace::discrete(2), {"y0", "y1"}, {"a0", "a1"}, Dist(init), Kernel(1, 2, 2, 4, kernel),
               CostTable(2, 2, 2, costs), 2);
}

}  // namespace fixtures
