#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cebound/spaces.hpp"

namespace cebound {

/// Balanced transportation problem: ship `supply` to `demand` at unit costs
/// `cost(i, j)`. Both sides must carry the same total mass.
struct TransportProblem {
  std::vector<double> supply;
  std::vector<double> demand;
  Matrix cost;
};

/// Optimal value together with dual prices satisfying
/// u_i + v_j <= cost(i, j), with equality on the optimal basis.
struct TransportSolution {
  double value = 0.0;
  std::vector<double> u;
  std::vector<double> v;
  Matrix flow;
};

/// Transportation simplex (network simplex on the bipartite graph) with
/// northwest-corner start and MODI pricing.
TransportSolution solve_transport_simplex(const TransportProblem& problem);

/// Generic two-phase dense tableau simplex with Bland's rule applied to the
/// transport LP. Slower, but independent of the network structure.
double solve_transport_dense_lp(const TransportProblem& problem);

/// Support size up to which w1 uses the network simplex; larger problems go
/// through the dense LP.
inline constexpr std::size_t kNetworkSimplexMaxSupport = 16;

/// Exact Wasserstein-1 distance between two distributions on `space`.
/// Throws StructuralError when sizes disagree.
double w1(const Dist& mu, const Dist& nu, const MetricSpace& space);
double w1(std::span<const double> mu, std::span<const double> nu, const MetricSpace& space);

/// A 1-Lipschitz potential f attaining sum f dmu - sum f dnu = w1(mu, nu),
/// recovered from the simplex duals by a c-transform.
std::vector<double> w1_potential(const Dist& mu, const Dist& nu, const MetricSpace& space);

/// sum_k w_k w1(mu_k, nu_k) - w1(sum w_k mu_k, sum w_k nu_k). Non-negative by
/// convexity of w1 up to rounding.
double w1_convexity_residual(std::span<const double> weights,
                             std::span<const std::pair<Dist, Dist>> components,
                             const MetricSpace& space);

}  // namespace cebound
