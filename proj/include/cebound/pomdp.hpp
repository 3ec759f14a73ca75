#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cebound/mdp.hpp"
#include "cebound/spaces.hpp"

namespace cebound {

/// Finite-horizon POMDP. The initial law and every transition row are joint
/// distributions over S x Y, flattened as s * |Y| + y.
class Pomdp {
 public:
  Pomdp() = default;
  Pomdp(MetricSpace states, std::vector<std::string> observations,
        std::vector<std::string> actions, Dist initial, Kernel transitions, CostTable costs,
        std::size_t horizon);

  const MetricSpace& states() const noexcept { return states_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_observations() const noexcept { return observations_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }
  std::size_t horizon() const noexcept { return horizon_; }
  const std::vector<std::string>& observation_labels() const noexcept { return observations_; }
  const std::vector<std::string>& action_labels() const noexcept { return actions_; }
  const Dist& initial() const noexcept { return initial_; }
  const Kernel& transitions() const noexcept { return transitions_; }
  const CostTable& costs() const noexcept { return costs_; }
  double cost_bound() const noexcept { return costs_.max_abs(); }

  /// The fully observed MDP: same costs, state marginal of the kernel.
  Mdp induced_mdp() const;
  /// Marginal of the initial law on Y.
  std::vector<double> initial_observation_marginal() const;

 private:
  MetricSpace states_;
  std::vector<std::string> observations_;
  std::vector<std::string> actions_;
  Dist initial_;
  Kernel transitions_;
  CostTable costs_;
  std::size_t horizon_ = 0;
};

/// Observation/action history h = (y_1, a_1, ..., a_{t-1}, y_t).
struct History {
  std::vector<std::size_t> observations;
  std::vector<std::size_t> actions;

  /// 0-based epoch of the last observation. Throws StructuralError when the
  /// lengths are inconsistent.
  std::size_t step() const;
  History extended(std::size_t action, std::size_t observation) const;
  std::string describe() const;
  bool operator==(const History&) const = default;
  auto operator<=>(const History&) const = default;
};

/// Exact Bayes filter b_{t|t}(. | h). Throws UnreachableHistory when the
/// history has zero probability under every continuation.
Dist filter(const Pomdp& p, const History& h);

/// One Bayes step from belief b under action a: returns the predictive joint
/// over (s', y') flattened as s' * |Y| + y'.
std::vector<double> predict_joint(const Pomdp& p, std::size_t step, std::span<const double> belief,
                                  std::size_t action);

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct HistoryNode {
  std::size_t step = 0;
  NodeId parent = kNoNode;
  std::size_t action = 0;       // action taken at the parent; unused at roots
  std::size_t observation = 0;  // last observation
  double cond_prob = 0.0;       // Pr(y | parent history, action), or xi_Y(y) at roots
  double likelihood = 0.0;      // product of cond_prob along the path
  NodeId first_child = kNoNode;
  std::size_t num_children = 0;
};

struct TreeOptions {
  std::size_t budget = 200000;
  /// Number of epochs to expand; 0 means the full horizon.
  std::size_t depth = 0;
  /// Children with conditional probability <= reach_tol are not materialized.
  double reach_tol = 0.0;
};

/// Breadth-first history tree of all positive-probability histories, with
/// the filter belief stored at every node. Children of a node are contiguous
/// and ordered by (action, observation). Immutable after construction.
class HistoryTree {
 public:
  /// Throws SizingError once more than `options.budget` nodes would be needed.
  static HistoryTree build(const Pomdp& p, const TreeOptions& options = {});

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t depth() const noexcept { return levels_.size(); }
  std::size_t num_states() const noexcept { return num_states_; }
  const HistoryNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const double> belief(NodeId id) const {
    return {beliefs_.data() + id * num_states_, num_states_};
  }
  const std::vector<NodeId>& level(std::size_t step) const { return levels_.at(step); }
  /// Child reached by (action, observation), or kNoNode when unreachable.
  NodeId child(NodeId id, std::size_t action, std::size_t observation) const;
  History history(NodeId id) const;
  std::optional<NodeId> find(const History& h) const;

  /// Worst-case node count sum_k |Y|^(k+1) |A|^k, saturating.
  static std::size_t worst_case_size(std::size_t obs, std::size_t actions, std::size_t depth);

 private:
  std::size_t num_states_ = 0;
  std::vector<HistoryNode> nodes_;
  std::vector<double> beliefs_;
  std::vector<std::vector<NodeId>> levels_;
};

/// Deterministic history-dependent policy tabulated over the nodes of one
/// HistoryTree. Missing entries are reported when evaluated.
struct HistoryPolicy {
  std::vector<std::optional<std::size_t>> action;
};

/// Per-node values of a policy or of the optimal value function.
struct TreeValues {
  std::vector<double> value;
  double operator[](NodeId id) const { return value.at(id); }
};

struct PomdpSolution {
  TreeValues values;
  HistoryPolicy policy;
};

/// Expected immediate cost E[c_k(S, a) | h] under the node belief.
double expected_cost(const Pomdp& p, const HistoryTree& tree, NodeId id, std::size_t action);

/// Exact optimal values W^P by backward recursion on the tree; ties go to
/// the lowest action index. The tree must span the full horizon.
PomdpSolution optimal_value(const Pomdp& p, const HistoryTree& tree);
PomdpSolution optimal_value(const Pomdp& p, const TreeOptions& options = {});

/// Exact values W^{P, mu}. Throws StructuralError naming the first history
/// on which the policy is undefined.
TreeValues evaluate_history_policy(const Pomdp& p, const HistoryTree& tree,
                                   const HistoryPolicy& mu);

struct ReachableHistory {
  History history;
  double likelihood = 0.0;
  Dist belief;
};

/// All positive-probability histories at 0-based epoch `step`.
std::vector<ReachableHistory> reachable_histories(const Pomdp& p, std::size_t step,
                                                  const TreeOptions& options = {});

}  // namespace cebound
