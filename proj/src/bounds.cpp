#include "cebound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cebound/errors.hpp"
#include "cebound/transport.hpp"

namespace cebound {

const char* to_string(ModuliKind kind) {
  return kind == ModuliKind::kLinear ? "linear" : "envelope";
}

ModuliKind parse_moduli_kind(const std::string& text) {
  if (text == "linear") return ModuliKind::kLinear;
  if (text == "envelope" || text == "concave-envelope") return ModuliKind::kEnvelope;
  throw ParseError("unknown moduli kind '" + text + "' (expected linear or envelope)");
}

ModulusScatter modulus_scatter(const Mdp& m, const Abstraction& ab) {
  if (ab.source_size() != m.num_states()) {
    throw StructuralError("abstraction source does not match the MDP state space");
  }
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  const std::size_t na = m.num_actions();
  ModulusScatter out;
  out.cost.resize(T);
  out.dynamics.resize(T - 1);
  // pushforward rows, computed once per (k, s, a)
  std::vector<std::vector<Dist>> push(T - 1);
  for (std::size_t k = 0; k + 1 < T; ++k) {
    push[k].reserve(n * na);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t a = 0; a < na; ++a) push[k].push_back(pushforward_kernel(m, ab, k, s, a));
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t s2 = s + 1; s2 < n; ++s2) {
      const double d = ab.target()(ab(s), ab(s2));
      for (std::size_t k = 0; k < T; ++k) {
        double gap = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
          gap = std::max(gap, std::abs(m.cost(k, s, a) - m.cost(k, s2, a)));
        }
        out.cost[k].emplace_back(d, gap);
        if (k + 1 < T) {
          double kgap = 0.0;
          for (std::size_t a = 0; a < na; ++a) {
            kgap = std::max(kgap, w1(push[k][s * na + a], push[k][s2 * na + a], ab.target()));
          }
          out.dynamics[k].emplace_back(d, kgap);
        }
      }
    }
  }
  return out;
}

namespace {

Modulus fit_one(std::span<const Modulus::Point> scatter, ModuliKind kind) {
  Modulus f = kind == ModuliKind::kLinear ? linear_fit(scatter) : concave_envelope(scatter);
  double scale = 1.0;
  for (const auto& [x, y] : scatter) scale = std::max(scale, std::abs(y));
  if (max_excess(f, scatter) > 1e-12 * scale) {
    throw InvariantViolation("fitted modulus does not dominate its scatter");
  }
  return f;
}

}  // namespace

ModuliSet fit_moduli(const ModulusScatter& scatter, ModuliKind kind) {
  ModuliSet out;
  for (const auto& s : scatter.cost) out.cost.push_back(fit_one(s, kind));
  for (const auto& s : scatter.dynamics) out.dynamics.push_back(fit_one(s, kind));
  return out;
}

ModuliSet fit_moduli(const Mdp& m, const Abstraction& ab, ModuliKind kind) {
  return fit_moduli(modulus_scatter(m, ab), kind);
}

std::vector<double> compute_eta(const HistoryTree& tree, const Abstraction& ab,
                                const EstimateTable& estimates) {
  if (tree.num_states() != ab.source_size()) {
    throw StructuralError("abstraction source does not match the tree's state space");
  }
  std::vector<double> eta(tree.depth(), 0.0);
  for (std::size_t k = 0; k < tree.depth(); ++k) {
    for (NodeId id : tree.level(k)) {
      const std::size_t z = estimates[id];
      auto b = tree.belief(id);
      double err = 0.0;
      for (std::size_t s = 0; s < b.size(); ++s) {
        if (b[s] != 0.0) err += b[s] * ab.distance_to(s, z);
      }
      eta[k] = std::max(eta[k], err);
    }
  }
  return eta;
}

HistoryPolicy ce_policy(const MarkovPolicy& abstract_policy, const HistoryTree& tree,
                        const EstimateTable& estimates) {
  HistoryPolicy mu;
  mu.action.resize(tree.size());
  for (NodeId id = 0; id < tree.size(); ++id) {
    mu.action[id] = abstract_policy(tree.node(id).step, estimates[id]);
  }
  return mu;
}

BoundCore theorem_bound(const std::vector<double>& eta, const ModuliSet& moduli,
                        const std::vector<double>& lip_v) {
  const std::size_t T = eta.size();
  if (T == 0 || moduli.cost.size() != T || moduli.dynamics.size() + 1 != T || lip_v.size() != T) {
    throw StructuralError("theorem_bound: eta, moduli and Lipschitz constants disagree on T");
  }
  for (double e : eta) {
    if (!(e >= 0.0)) throw StructuralError("theorem_bound: negative estimation error");
  }
  BoundCore c;
  c.eta = eta;
  c.lip_v = lip_v;
  c.eps.resize(T);
  c.delta.resize(T - 1);
  for (std::size_t k = 0; k < T; ++k) c.eps[k] = moduli.cost[k](eta[k]);
  for (std::size_t k = 0; k + 1 < T; ++k) c.delta[k] = moduli.dynamics[k](eta[k]) + eta[k + 1];
  c.alpha.assign(T, 0.0);
  c.bound.assign(T, 0.0);
  // tail[k] = sum_{j=k}^{T-2} [delta_j Lip(V_{j+1}) + eps_{j+1}]
  double tail = 0.0;
  for (std::size_t k = T; k-- > 0;) {
    if (k + 1 < T) tail += c.delta[k] * lip_v[k + 1] + c.eps[k + 1];
    c.alpha[k] = c.eps[k] + tail;
    c.bound[k] = 2.0 * c.alpha[k];
  }
  return c;
}

std::vector<AlphaTerm> alpha_decomposition(const BoundCore& core, std::size_t step) {
  if (step >= core.alpha.size()) throw StructuralError("epoch out of range");
  std::vector<AlphaTerm> out;
  out.push_back({"eps_" + std::to_string(step + 1), core.eps[step]});
  for (std::size_t j = step; j + 1 < core.alpha.size(); ++j) {
    out.push_back({"delta_" + std::to_string(j + 1) + "*Lip(V_" + std::to_string(j + 2) + ")",
                   core.delta[j] * core.lip_v[j + 1]});
    out.push_back({"eps_" + std::to_string(j + 2), core.eps[j + 1]});
  }
  return out;
}

double BoundReport::worst_slack() const {
  double out = std::numeric_limits<double>::infinity();
  for (double s : slack) out = std::min(out, s);
  return out;
}

Analysis analyze(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                 const VerifyOptions& options) {
  if (ab.source_size() != p.num_states()) {
    throw StructuralError("abstraction source does not match the POMDP state space");
  }
  Analysis a;
  TreeOptions tree_options = options.tree;
  tree_options.depth = 0;
  a.tree = HistoryTree::build(p, tree_options);
  a.estimates = g.tabulate(a.tree, ab.target_size());
  a.mdp = p.induced_mdp();
  a.abstract_mdp = build_abstract_mdp(a.mdp, ab);
  a.abstract_solution = backward_induction(a.abstract_mdp);
  a.ce = ce_policy(a.abstract_solution.policy, a.tree, a.estimates);
  a.optimal = optimal_value(p, a.tree);
  a.ce_values = evaluate_history_policy(p, a.tree, a.ce);
  a.moduli = fit_moduli(a.mdp, ab, options.moduli);

  const std::size_t T = p.horizon();
  std::vector<double> lip(T, 0.0);
  if (options.recursive_lipschitz) {
    const auto rec = recursive_lipschitz_bound(mdp_lipschitz_constants(a.abstract_mdp), T);
    for (std::size_t k = 0; k < T; ++k) lip[k] = rec[k];
  } else {
    for (std::size_t k = 0; k < T; ++k) {
      lip[k] = lipschitz_of(a.abstract_solution.values[k], ab.target());
    }
  }
  a.core = theorem_bound(compute_eta(a.tree, ab, a.estimates), a.moduli, lip);
  return a;
}

BoundReport report_from(const Analysis& a, const std::string& estimator_name,
                        const VerifyOptions& options) {
  BoundReport r;
  r.estimator = estimator_name;
  r.moduli = options.moduli;
  r.core = a.core;
  r.tree_nodes = a.tree.size();
  const std::size_t T = a.core.alpha.size();
  r.gap.assign(T, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    for (NodeId id : a.tree.level(k)) {
      const double gap = a.ce_values[id] - a.optimal.values[id];
      r.gap[k] = std::max(r.gap[k], gap);
      if (k == 0) r.root_gaps.push_back(gap);
      if (gap > a.core.bound[k] + options.tol) {
        r.violations.push_back({k, a.tree.history(id), gap, a.core.bound[k]});
      }
    }
  }
  r.slack.resize(T);
  for (std::size_t k = 0; k < T; ++k) r.slack[k] = a.core.bound[k] - r.gap[k];
  return r;
}

BoundReport verify_theorem(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                           const VerifyOptions& options) {
  return report_from(analyze(p, ab, g, options), g.name(), options);
}

CorollaryReport corollary_gap(const Mdp& m, const Abstraction& ab, ModuliKind kind, double tol) {
  const Mdp abstract = build_abstract_mdp(m, ab);
  const MdpSolution abs_sol = backward_induction(abstract);
  const MdpSolution opt = backward_induction(m);
  const ValueFunctions lifted = evaluate_markov_policy(m, lift_policy(abs_sol.policy, ab));
  const ModuliSet moduli = fit_moduli(m, ab, kind);
  const std::size_t T = m.horizon();
  std::vector<double> lip(T);
  for (std::size_t k = 0; k < T; ++k) lip[k] = lipschitz_of(abs_sol.values[k], ab.target());

  CorollaryReport r;
  r.core = theorem_bound(std::vector<double>(T, 0.0), moduli, lip);
  r.gap.assign(T, std::vector<double>(m.num_states(), 0.0));
  r.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t s = 0; s < m.num_states(); ++s) {
      r.gap[k][s] = lifted[k][s] - opt.values[k][s];
      r.worst_excess = std::max(r.worst_excess, r.gap[k][s] - r.core.bound[k]);
    }
  }
  r.passed = r.worst_excess <= tol;
  return r;
}

AisResiduals ais_residuals(const Pomdp& p, const Abstraction& ab, const Analysis& a) {
  AisResiduals out;
  out.worst_ap1_excess = -std::numeric_limits<double>::infinity();
  out.worst_ap2_excess = -std::numeric_limits<double>::infinity();
  const std::size_t T = p.horizon();
  const std::size_t na = p.num_actions();
  const auto& target = ab.target();
  for (NodeId id = 0; id < a.tree.size(); ++id) {
    const HistoryNode& node = a.tree.node(id);
    const std::size_t k = node.step;
    const std::size_t z = a.estimates[id];
    for (std::size_t act = 0; act < na; ++act) {
      AisEntry e;
      e.node = id;
      e.step = k;
      e.action = act;
      e.ap1 = std::abs(expected_cost(p, a.tree, id, act) - a.abstract_mdp.cost(k, z, act));
      e.ap1_ceiling = a.core.eps[k];
      out.worst_ap1_excess = std::max(out.worst_ap1_excess, e.ap1 - e.ap1_ceiling);
      if (k + 1 < T) {
        // predicted law of the next estimate
        std::vector<double> psi(ab.target_size(), 0.0);
        for (std::size_t c = 0; c < node.num_children; ++c) {
          const NodeId cid = node.first_child + c;
          if (a.tree.node(cid).action == act) psi[a.estimates[cid]] += a.tree.node(cid).cond_prob;
        }
        e.ap2 = w1(psi, a.abstract_mdp.transitions().row(k, z, act), target);
        e.ap2_ceiling = a.core.delta[k];
        out.worst_ap2_excess = std::max(out.worst_ap2_excess, *e.ap2 - e.ap2_ceiling);
      }
      out.entries.push_back(e);
    }
  }
  if (T == 1) out.worst_ap2_excess = 0.0;
  return out;
}

AisResiduals ais_residuals(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                           const VerifyOptions& options) {
  return ais_residuals(p, ab, analyze(p, ab, g, options));
}

double kernel_error_check(const Mdp& m, const Abstraction& ab, const ModuliSet& moduli,
                    std::optional<std::size_t> samples, std::uint64_t seed) {
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  const std::size_t k_abs = ab.target_size();
  const std::size_t na = m.num_actions();
  if (T < 2) return -std::numeric_limits<double>::infinity();
  const Mdp abstract = build_abstract_mdp(m, ab);
  auto excess = [&](std::size_t k, std::size_t s, std::size_t z, std::size_t a) {
    const Dist lhs = pushforward_kernel(m, ab, k, s, a);
    const double d = w1(lhs.mass(), abstract.transitions().row(k, z, a), ab.target());
    return d - moduli.dynamics.at(k)(ab.distance_to(s, z));
  };
  double worst = -std::numeric_limits<double>::infinity();
  if (!samples) {
    for (std::size_t k = 0; k + 1 < T; ++k) {
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t z = 0; z < k_abs; ++z) {
          for (std::size_t a = 0; a < na; ++a) worst = std::max(worst, excess(k, s, z, a));
        }
      }
    }
    return worst;
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < *samples; ++i) {
    const std::size_t k = rng() % (T - 1);
    const std::size_t s = rng() % n;
    const std::size_t z = rng() % k_abs;
    const std::size_t a = rng() % na;
    worst = std::max(worst, excess(k, s, z, a));
  }
  return worst;
}

}  // namespace cebound
