#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cebound/abstraction.hpp"
#include "cebound/pomdp.hpp"

namespace cebound {

/// Abstract-state estimates g_t(h_t), one per node of a HistoryTree.
struct EstimateTable {
  std::vector<std::size_t> estimate;
  std::size_t operator[](NodeId id) const { return estimate.at(id); }
};

/// Finite agent-state recursion z_1 = init(y_1), z_{t+1} = update(z_t, a_t, y_{t+1}).
struct RecursiveRule {
  std::vector<std::size_t> init;                             // [y]
  std::vector<std::vector<std::vector<std::size_t>>> update;  // [z][a][y]
};

/// Abstract state estimation functions g_t: H_t -> S~.
///
/// Rules are evaluated over a materialized HistoryTree in breadth-first
/// order, so a rule may read the estimates already assigned to ancestors.
class Estimator {
 public:
  using Rule = std::function<std::size_t(const HistoryTree& tree, NodeId id,
                                         std::span<const std::size_t> assigned)>;

  Estimator() = default;
  Estimator(std::string name, Rule rule) : name_(std::move(name)), rule_(std::move(rule)) {}

  /// g_t(h_t) = map[y_t].
  static Estimator last_observation(std::vector<std::size_t> map,
                                    std::string name = "last-observation");
  /// g_t(h_t) = phi(y_t) for models with Y = S.
  static Estimator quantized_last_observation(const Abstraction& ab);
  /// Most probable abstract state under the posterior of phi(S_t); ties go to
  /// the lowest index.
  static Estimator map_posterior(const Abstraction& ab);
  /// Abstract state minimizing the posterior expected distance
  /// E[d_S~(phi(S_t), z) | h_t] (a metric-space posterior mean); ties go to
  /// the lowest index.
  static Estimator posterior_mean_representative(const Abstraction& ab);
  static Estimator recursive(RecursiveRule rule, std::string name = "recursive");
  /// Explicit table; histories missing from it are undefined.
  static Estimator table(std::map<History, std::size_t> entries);
  /// Deterministic pseudo-random assignment keyed on (seed, history).
  static Estimator hashed(std::uint64_t seed, std::size_t targets);

  const std::string& name() const noexcept { return name_; }

  /// Evaluates the rule on every node. Throws StructuralError naming the
  /// history when the rule is undefined there or returns an index outside
  /// [0, targets).
  EstimateTable tabulate(const HistoryTree& tree, std::size_t targets) const;

  /// Recursive rules also expose their table form for serialization.
  const std::optional<RecursiveRule>& recursive_form() const noexcept { return recursive_; }
  const std::optional<std::vector<std::size_t>>& observation_map() const noexcept {
    return observation_map_;
  }
  const std::optional<std::map<History, std::size_t>>& table_form() const noexcept {
    return table_;
  }
  std::optional<std::uint64_t> hash_seed() const noexcept { return hash_seed_; }

 private:
  std::string name_;
  Rule rule_;
  std::optional<RecursiveRule> recursive_;
  std::optional<std::vector<std::size_t>> observation_map_;
  std::optional<std::map<History, std::size_t>> table_;
  std::optional<std::uint64_t> hash_seed_;
};

}  // namespace cebound
