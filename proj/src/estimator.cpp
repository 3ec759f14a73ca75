#include "cebound/estimator.hpp"

#include <limits>

#include "cebound/errors.hpp"

namespace cebound {

namespace {

constexpr std::size_t kUndefined = std::numeric_limits<std::size_t>::max();

std::vector<double> abstract_posterior(const HistoryTree& tree, NodeId id, const Abstraction& ab) {
  auto b = tree.belief(id);
  std::vector<double> out(ab.target_size(), 0.0);
  for (std::size_t s = 0; s < b.size(); ++s) out[ab(s)] += b[s];
  return out;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Estimator Estimator::last_observation(std::vector<std::size_t> map, std::string name) {
  Estimator e(std::move(name), [map](const HistoryTree& tree, NodeId id, auto) {
    const std::size_t y = tree.node(id).observation;
    return y < map.size() ? map[y] : kUndefined;
  });
  e.observation_map_ = std::move(map);
  return e;
}

Estimator Estimator::quantized_last_observation(const Abstraction& ab) {
  return last_observation(ab.phi(), "quantized-last-observation");
}

Estimator Estimator::map_posterior(const Abstraction& ab) {
  return Estimator("map-posterior", [ab](const HistoryTree& tree, NodeId id, auto) {
    const auto post = abstract_posterior(tree, id, ab);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < post.size(); ++c) {
      if (post[c] > post[arg]) arg = c;
    }
    return arg;
  });
}

Estimator Estimator::posterior_mean_representative(const Abstraction& ab) {
  return Estimator("posterior-mean-representative", [ab](const HistoryTree& tree, NodeId id, auto) {
    const auto post = abstract_posterior(tree, id, ab);
    const auto& d = ab.target();
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < post.size(); ++z) {
      double risk = 0.0;
      for (std::size_t c = 0; c < post.size(); ++c) risk += post[c] * d(c, z);
      if (risk < best - 1e-15) {
        best = risk;
        arg = z;
      }
    }
    return arg;
  });
}

Estimator Estimator::recursive(RecursiveRule rule, std::string name) {
  Estimator e(std::move(name), [rule](const HistoryTree& tree, NodeId id,
                                      std::span<const std::size_t> assigned) {
    const HistoryNode& n = tree.node(id);
    if (n.parent == kNoNode) return n.observation < rule.init.size() ? rule.init[n.observation] : kUndefined;
    const std::size_t z = assigned[n.parent];
    if (z >= rule.update.size() || n.action >= rule.update[z].size() ||
        n.observation >= rule.update[z][n.action].size()) {
      return kUndefined;
    }
    return rule.update[z][n.action][n.observation];
  });
  e.recursive_ = std::move(rule);
  return e;
}

Estimator Estimator::table(std::map<History, std::size_t> entries) {
  Estimator e("table", [entries](const HistoryTree& tree, NodeId id, auto) {
    auto it = entries.find(tree.history(id));
    return it == entries.end() ? kUndefined : it->second;
  });
  e.table_ = std::move(entries);
  return e;
}

Estimator Estimator::hashed(std::uint64_t seed, std::size_t targets) {
  Estimator e("hashed", [seed, targets](const HistoryTree& tree, NodeId id, auto) {
    const History h = tree.history(id);
    std::uint64_t x = splitmix(seed);
    for (std::size_t k = 0; k < h.observations.size(); ++k) {
      x = splitmix(x ^ (h.observations[k] + 1));
      if (k < h.actions.size()) x = splitmix(x ^ ((h.actions[k] + 1) << 20));
    }
    return static_cast<std::size_t>(x % targets);
  });
  e.hash_seed_ = seed;
  return e;
}

EstimateTable Estimator::tabulate(const HistoryTree& tree, std::size_t targets) const {
  if (!rule_) throw StructuralError("estimator has no rule");
  EstimateTable out;
  out.estimate.assign(tree.size(), kUndefined);
  // Node ids are assigned breadth-first, so parents precede children.
  for (NodeId id = 0; id < tree.size(); ++id) {
    const std::size_t z = rule_(tree, id, out.estimate);
    if (z >= targets) {
      throw StructuralError("estimator '" + name_ + "' undefined on reachable history " +
                            tree.history(id).describe());
    }
    out.estimate[id] = z;
  }
  return out;
}

}  // namespace cebound
