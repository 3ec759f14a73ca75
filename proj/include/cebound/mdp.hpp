#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cebound/spaces.hpp"

namespace cebound {

/// Per-step cost table c_k(s, a), steps 0..T-1.
class CostTable {
 public:
  CostTable() = default;
  /// `data` laid out [step][state][action].
  CostTable(std::size_t steps, std::size_t states, std::size_t actions, std::vector<double> data);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t states() const noexcept { return states_; }
  std::size_t actions() const noexcept { return actions_; }
  double operator()(std::size_t step, std::size_t s, std::size_t a) const {
    return data_[(step * states_ + s) * actions_ + a];
  }
  double max_abs() const;
  const std::vector<double>& data() const noexcept { return data_; }
  bool operator==(const CostTable&) const = default;

 private:
  std::size_t steps_ = 0;
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> data_;
};

/// Finite-horizon MDP. Decision epochs are numbered 0..T-1 in code
/// (epoch k is time t = k + 1); `transitions` has T-1 steps.
class Mdp {
 public:
  Mdp() = default;
  Mdp(MetricSpace states, std::size_t actions, Kernel transitions, CostTable costs,
      std::size_t horizon);

  const MetricSpace& states() const noexcept { return states_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return actions_; }
  std::size_t horizon() const noexcept { return horizon_; }
  const Kernel& transitions() const noexcept { return transitions_; }
  const CostTable& costs() const noexcept { return costs_; }
  double cost(std::size_t step, std::size_t s, std::size_t a) const { return costs_(step, s, a); }
  /// Declared bound on |c|, the largest cost magnitude in the table.
  double cost_bound() const noexcept { return cost_bound_; }

 private:
  MetricSpace states_;
  std::size_t actions_ = 0;
  Kernel transitions_;
  CostTable costs_;
  std::size_t horizon_ = 0;
  double cost_bound_ = 0.0;
};

/// Deterministic Markov policy: action[k][s].
struct MarkovPolicy {
  std::vector<std::vector<std::size_t>> action;
  std::size_t operator()(std::size_t step, std::size_t s) const { return action.at(step).at(s); }
  bool operator==(const MarkovPolicy&) const = default;
};

/// Value functions V[k][s] for k = 0..T; V[T] is identically zero.
using ValueFunctions = std::vector<std::vector<double>>;

struct MdpSolution {
  MarkovPolicy policy;
  ValueFunctions values;
};

/// Backward induction. Ties in the argmin go to the lowest action index.
MdpSolution backward_induction(const Mdp& m);

/// Exact value of a Markov policy. Throws StructuralError when the policy is
/// missing a step or state or names an invalid action.
ValueFunctions evaluate_markov_policy(const Mdp& m, const MarkovPolicy& pi);

/// max over s != s' of |V(s) - V(s')| / d(s, s'); 0 on singletons. Pairs at
/// distance zero are skipped when their values agree and give +inf otherwise.
double lipschitz_of(std::span<const double> values, const MetricSpace& space);

/// Linear cost/dynamics constants L^c_k and L^P_k for each step, where
/// L^P_k is only meaningful for k < T-1.
struct LinearConstants {
  std::vector<double> cost;
  std::vector<double> dynamics;
};

/// Exact pairwise cost and dynamics Lipschitz constants of `m` with respect to
/// its own metric (w1 for the dynamics).
LinearConstants mdp_lipschitz_constants(const Mdp& m);

/// Upper bounds obtained by unrolling Lip(V_k) <= L^c_k + L^P_k Lip(V_{k+1}),
/// where L^P_k is the dynamics constant of the step-k kernel mapping epoch k to
/// epoch k+1. Entry T is 0.
std::vector<double> recursive_lipschitz_bound(const LinearConstants& constants,
                                              std::size_t horizon);

}  // namespace cebound
