#include "cebound/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cebound/errors.hpp"

namespace cebound {

Pomdp::Pomdp(MetricSpace states, std::vector<std::string> observations,
             std::vector<std::string> actions, Dist initial, Kernel transitions, CostTable costs,
             std::size_t horizon)
    : states_(std::move(states)), observations_(std::move(observations)),
      actions_(std::move(actions)), initial_(std::move(initial)),
      transitions_(std::move(transitions)), costs_(std::move(costs)), horizon_(horizon) {
  const std::size_t ns = states_.size();
  const std::size_t ny = observations_.size();
  const std::size_t na = actions_.size();
  if (horizon_ == 0) throw StructuralError("horizon must be positive");
  if (ns == 0 || ny == 0 || na == 0) throw StructuralError("POMDP with an empty S, Y or A");
  if (initial_.size() != ns * ny) {
    throw StructuralError("initial law must be a distribution over S x Y");
  }
  if (transitions_.steps() != horizon_ - 1 || transitions_.sources() != ns ||
      transitions_.targets() != ns * ny || (horizon_ > 1 && transitions_.actions() != na)) {
    throw StructuralError("POMDP kernel shape does not match (T-1, |S|, |A|, |S||Y|)");
  }
  if (costs_.steps() != horizon_ || costs_.states() != ns || costs_.actions() != na) {
    throw StructuralError("POMDP cost table shape does not match (T, |S|, |A|)");
  }
}

Mdp Pomdp::induced_mdp() const {
  const std::size_t ns = num_states();
  const std::size_t ny = num_observations();
  const std::size_t na = num_actions();
  const std::size_t steps = horizon_ - 1;
  std::vector<double> data(steps * ns * na * ns, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        auto row = transitions_.row(k, s, a);
        double* out = data.data() + ((k * ns + s) * na + a) * ns;
        for (std::size_t s2 = 0; s2 < ns; ++s2) {
          double m = 0.0;
          for (std::size_t y = 0; y < ny; ++y) m += row[s2 * ny + y];
          out[s2] = m;
        }
      }
    }
  }
  return Mdp(states_, na, Kernel(steps, ns, na, ns, std::move(data), 1e-9), costs_, horizon_);
}

std::vector<double> Pomdp::initial_observation_marginal() const {
  std::vector<double> out(num_observations(), 0.0);
  for (std::size_t s = 0; s < num_states(); ++s) {
    for (std::size_t y = 0; y < num_observations(); ++y) {
      out[y] += initial_[s * num_observations() + y];
    }
  }
  return out;
}

std::size_t History::step() const {
  if (observations.empty() || observations.size() != actions.size() + 1) {
    throw StructuralError("history needs |y| = |a| + 1 >= 1");
  }
  return actions.size();
}

History History::extended(std::size_t action, std::size_t observation) const {
  History h = *this;
  h.actions.push_back(action);
  h.observations.push_back(observation);
  return h;
}

std::string History::describe() const {
  std::ostringstream os;
  os << "(y" << 1 << "=" << (observations.empty() ? 0 : observations[0]);
  for (std::size_t k = 0; k < actions.size(); ++k) {
    os << ", a" << k + 1 << "=" << actions[k] << ", y" << k + 2 << "=" << observations[k + 1];
  }
  os << ")";
  return os.str();
}

std::vector<double> predict_joint(const Pomdp& p, std::size_t step, std::span<const double> belief,
                                  std::size_t action) {
  const std::size_t ns = p.num_states();
  const std::size_t width = ns * p.num_observations();
  std::vector<double> joint(width, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    const double b = belief[s];
    if (b == 0.0) continue;
    auto row = p.transitions().row(step, s, action);
    for (std::size_t j = 0; j < width; ++j) joint[j] += b * row[j];
  }
  return joint;
}

namespace {

// Conditions a joint over (s, y) on y. Returns the marginal Pr(y).
double condition_on(std::span<const double> joint, std::size_t ns, std::size_t ny, std::size_t y,
                    std::span<double> belief) {
  double total = 0.0;
  for (std::size_t s = 0; s < ns; ++s) total += joint[s * ny + y];
  if (total > 0.0) {
    for (std::size_t s = 0; s < ns; ++s) belief[s] = joint[s * ny + y] / total;
  }
  return total;
}

}  // namespace

Dist filter(const Pomdp& p, const History& h) {
  const std::size_t step = h.step();
  if (step >= p.horizon()) throw StructuralError("history longer than the horizon");
  const std::size_t ns = p.num_states();
  const std::size_t ny = p.num_observations();
  std::vector<double> belief(ns, 0.0);
  if (h.observations[0] >= ny) throw StructuralError("observation index out of range");
  double pr = condition_on(p.initial().mass(), ns, ny, h.observations[0], belief);
  if (!(pr > 0.0)) throw UnreachableHistory("unreachable history " + h.describe() + " at t=1");
  for (std::size_t k = 0; k < step; ++k) {
    if (h.actions[k] >= p.num_actions() || h.observations[k + 1] >= ny) {
      throw StructuralError("history index out of range");
    }
    auto joint = predict_joint(p, k, belief, h.actions[k]);
    pr = condition_on(joint, ns, ny, h.observations[k + 1], belief);
    if (!(pr > 0.0)) {
      throw UnreachableHistory("unreachable history " + h.describe() + " at t=" +
                               std::to_string(k + 2));
    }
  }
  return Dist::normalized(std::move(belief));
}

std::size_t HistoryTree::worst_case_size(std::size_t obs, std::size_t actions, std::size_t depth) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  std::size_t level = obs;
  for (std::size_t k = 0; k < depth; ++k) {
    total = total > kMax - level ? kMax : total + level;
    if (k + 1 < depth) {
      const std::size_t branch = obs * actions;
      level = (branch != 0 && level > kMax / branch) ? kMax : level * branch;
    }
  }
  return total;
}

HistoryTree HistoryTree::build(const Pomdp& p, const TreeOptions& options) {
  const std::size_t ns = p.num_states();
  const std::size_t ny = p.num_observations();
  const std::size_t na = p.num_actions();
  const std::size_t depth = options.depth == 0 ? p.horizon() : std::min(options.depth, p.horizon());

  HistoryTree tree;
  tree.num_states_ = ns;
  auto overflow = [&]() {
    throw SizingError("history tree exceeds the node budget of " +
                          std::to_string(options.budget) + " (worst case " +
                          std::to_string(worst_case_size(ny, na, depth)) + " nodes)",
                      worst_case_size(ny, na, depth), options.budget);
  };
  std::vector<double> buffer(ns);
  auto add = [&](HistoryNode node, std::span<const double> belief) {
    if (tree.nodes_.size() >= options.budget) overflow();
    tree.nodes_.push_back(node);
    tree.beliefs_.insert(tree.beliefs_.end(), belief.begin(), belief.end());
    return tree.nodes_.size() - 1;
  };

  tree.levels_.emplace_back();
  for (std::size_t y = 0; y < ny; ++y) {
    const double pr = condition_on(p.initial().mass(), ns, ny, y, buffer);
    if (pr > options.reach_tol && pr > 0.0) {
      HistoryNode node;
      node.step = 0;
      node.observation = y;
      node.cond_prob = pr;
      node.likelihood = pr;
      tree.levels_[0].push_back(add(node, buffer));
    }
  }
  for (std::size_t k = 0; k + 1 < depth; ++k) {
    tree.levels_.emplace_back();
    for (NodeId id : tree.levels_[k]) {
      tree.nodes_[id].first_child = tree.nodes_.size();
      std::size_t count = 0;
      for (std::size_t a = 0; a < na; ++a) {
        std::vector<double> parent_belief(tree.belief(id).begin(), tree.belief(id).end());
        auto joint = predict_joint(p, k, parent_belief, a);
        for (std::size_t y = 0; y < ny; ++y) {
          const double pr = condition_on(joint, ns, ny, y, buffer);
          if (!(pr > options.reach_tol && pr > 0.0)) continue;
          HistoryNode node;
          node.step = k + 1;
          node.parent = id;
          node.action = a;
          node.observation = y;
          node.cond_prob = pr;
          node.likelihood = tree.nodes_[id].likelihood * pr;
          tree.levels_[k + 1].push_back(add(node, buffer));
          ++count;
        }
      }
      tree.nodes_[id].num_children = count;
      if (count == 0) tree.nodes_[id].first_child = kNoNode;
    }
  }
  return tree;
}

NodeId HistoryTree::child(NodeId id, std::size_t action, std::size_t observation) const {
  const HistoryNode& n = nodes_.at(id);
  if (n.first_child == kNoNode) return kNoNode;
  const auto begin = nodes_.begin() + static_cast<std::ptrdiff_t>(n.first_child);
  const auto end = begin + static_cast<std::ptrdiff_t>(n.num_children);
  auto it = std::lower_bound(begin, end, std::pair{action, observation},
                             [](const HistoryNode& c, const std::pair<std::size_t, std::size_t>& key) {
                               return std::pair{c.action, c.observation} < key;
                             });
  if (it == end || it->action != action || it->observation != observation) return kNoNode;
  return static_cast<NodeId>(it - nodes_.begin());
}

History HistoryTree::history(NodeId id) const {
  History h;
  for (NodeId cur = id; cur != kNoNode; cur = nodes_.at(cur).parent) {
    h.observations.push_back(nodes_[cur].observation);
    if (nodes_[cur].parent != kNoNode) h.actions.push_back(nodes_[cur].action);
  }
  std::reverse(h.observations.begin(), h.observations.end());
  std::reverse(h.actions.begin(), h.actions.end());
  return h;
}

std::optional<NodeId> HistoryTree::find(const History& h) const {
  const std::size_t step = h.step();
  if (levels_.empty() || step >= levels_.size()) return std::nullopt;
  NodeId cur = kNoNode;
  for (NodeId root : levels_[0]) {
    if (nodes_[root].observation == h.observations[0]) cur = root;
  }
  for (std::size_t k = 0; k < step && cur != kNoNode; ++k) {
    cur = child(cur, h.actions[k], h.observations[k + 1]);
  }
  if (cur == kNoNode) return std::nullopt;
  return cur;
}

double expected_cost(const Pomdp& p, const HistoryTree& tree, NodeId id, std::size_t action) {
  const std::size_t step = tree.node(id).step;
  auto b = tree.belief(id);
  double out = 0.0;
  for (std::size_t s = 0; s < b.size(); ++s) out += b[s] * p.costs()(step, s, action);
  return out;
}

namespace {

void require_full_depth(const Pomdp& p, const HistoryTree& tree) {
  if (tree.depth() != p.horizon()) {
    throw StructuralError("value recursion needs a tree spanning the full horizon");
  }
}

// Continuation sum over the children reached by `action`.
double continuation(const HistoryTree& tree, NodeId id, std::size_t action,
                    const std::vector<double>& next) {
  const HistoryNode& n = tree.node(id);
  double out = 0.0;
  for (std::size_t c = 0; c < n.num_children; ++c) {
    const NodeId cid = n.first_child + c;
    const HistoryNode& child = tree.node(cid);
    if (child.action == action) out += child.cond_prob * next[cid];
  }
  return out;
}

}  // namespace

PomdpSolution optimal_value(const Pomdp& p, const HistoryTree& tree) {
  require_full_depth(p, tree);
  PomdpSolution sol;
  sol.values.value.assign(tree.size(), 0.0);
  sol.policy.action.assign(tree.size(), std::nullopt);
  for (std::size_t k = p.horizon(); k-- > 0;) {
    for (NodeId id : tree.level(k)) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t a = 0; a < p.num_actions(); ++a) {
        const double q = expected_cost(p, tree, id, a) + continuation(tree, id, a, sol.values.value);
        if (q < best) {
          best = q;
          arg = a;
        }
      }
      sol.values.value[id] = best;
      sol.policy.action[id] = arg;
    }
  }
  return sol;
}

PomdpSolution optimal_value(const Pomdp& p, const TreeOptions& options) {
  return optimal_value(p, HistoryTree::build(p, options));
}

TreeValues evaluate_history_policy(const Pomdp& p, const HistoryTree& tree,
                                   const HistoryPolicy& mu) {
  require_full_depth(p, tree);
  TreeValues out;
  out.value.assign(tree.size(), 0.0);
  for (std::size_t k = p.horizon(); k-- > 0;) {
    for (NodeId id : tree.level(k)) {
      if (id >= mu.action.size() || !mu.action[id] || *mu.action[id] >= p.num_actions()) {
        throw StructuralError("policy undefined on reachable history " +
                              tree.history(id).describe());
      }
      const std::size_t a = *mu.action[id];
      out.value[id] = expected_cost(p, tree, id, a) + continuation(tree, id, a, out.value);
    }
  }
  return out;
}

std::vector<ReachableHistory> reachable_histories(const Pomdp& p, std::size_t step,
                                                  const TreeOptions& options) {
  if (step >= p.horizon()) throw StructuralError("step beyond the horizon");
  TreeOptions o = options;
  o.depth = step + 1;
  const HistoryTree tree = HistoryTree::build(p, o);
  std::vector<ReachableHistory> out;
  for (NodeId id : tree.level(step)) {
    auto b = tree.belief(id);
    out.push_back({tree.history(id), tree.node(id).likelihood,
                   Dist::normalized(std::vector<double>(b.begin(), b.end()))});
  }
  return out;
}

}  // namespace cebound
