#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cebound/abstraction.hpp"
#include "cebound/estimator.hpp"
#include "cebound/mdp.hpp"
#include "cebound/modulus.hpp"
#include "cebound/pomdp.hpp"

namespace cebound {

enum class ModuliKind { kLinear, kEnvelope };

const char* to_string(ModuliKind kind);
/// Accepts "linear", "envelope" and "concave-envelope".
ModuliKind parse_moduli_kind(const std::string& text);

/// Scatter of (d_S~(phi(s), phi(s')), gap) over all state pairs and actions:
/// cost gaps per step, and w1 gaps of the pushforward kernel per step k < T-1.
struct ModulusScatter {
  std::vector<std::vector<Modulus::Point>> cost;
  std::vector<std::vector<Modulus::Point>> dynamics;
};

ModulusScatter modulus_scatter(const Mdp& m, const Abstraction& ab);

/// F^c_k for k = 0..T-1 and F^P_k for k = 0..T-2.
struct ModuliSet {
  std::vector<Modulus> cost;
  std::vector<Modulus> dynamics;
};

/// Fits moduli from the scatter and checks that both smoothness inequalities
/// hold for every pair; a failed check throws InvariantViolation.
ModuliSet fit_moduli(const Mdp& m, const Abstraction& ab, ModuliKind kind);
ModuliSet fit_moduli(const ModulusScatter& scatter, ModuliKind kind);

/// eta_k = max over reachable h of E[d_S~(phi(S_k), g_k(h)) | h], one entry
/// per epoch of the tree.
std::vector<double> compute_eta(const HistoryTree& tree, const Abstraction& ab,
                                const EstimateTable& estimates);

/// mu_k(h) = pi~_k(g_k(h)).
HistoryPolicy ce_policy(const MarkovPolicy& abstract_policy, const HistoryTree& tree,
                        const EstimateTable& estimates);

/// epsilon, delta, alpha and the 2 alpha bound for each epoch. delta has
/// T-1 entries; the last epoch has none.
struct BoundCore {
  std::vector<double> eta;
  std::vector<double> eps;
  std::vector<double> delta;
  std::vector<double> lip_v;
  std::vector<double> alpha;
  std::vector<double> bound;
};

/// eps_k = F^c_k(eta_k), delta_k = F^P_k(eta_k) + eta_{k+1},
/// alpha_k = eps_k + sum_{j=k}^{T-2} [delta_j Lip(V_{j+1}) + eps_{j+1}].
/// `lip_v` holds Lip(V~_k) for k = 0..T-1. Throws StructuralError on
/// negative eta or mismatched lengths.
BoundCore theorem_bound(const std::vector<double>& eta, const ModuliSet& moduli,
                        const std::vector<double>& lip_v);

/// The individual additive terms of alpha_k.
struct AlphaTerm {
  std::string label;
  double value = 0.0;
};
std::vector<AlphaTerm> alpha_decomposition(const BoundCore& core, std::size_t step);

struct VerifyOptions {
  ModuliKind moduli = ModuliKind::kLinear;
  TreeOptions tree;
  /// Use the unrolled recursive Lipschitz bound instead of the exact
  /// pairwise constant of V~.
  bool recursive_lipschitz = false;
  double tol = 1e-9;
};

struct BoundViolation {
  std::size_t step = 0;
  History history;
  double gap = 0.0;
  double bound = 0.0;
};

/// Result of checking the certainty-equivalent sub-optimality bound.
struct BoundReport {
  std::string instance_id;
  std::string estimator;
  ModuliKind moduli = ModuliKind::kLinear;
  BoundCore core;
  std::vector<double> gap;    // worst W^{P,mu} - W^P over reachable histories, per epoch
  std::vector<double> slack;  // bound - gap
  std::vector<double> root_gaps;
  std::size_t tree_nodes = 0;
  std::vector<BoundViolation> violations;
  std::map<std::string, double> notes;
  bool passed() const noexcept { return violations.empty(); }
  double worst_slack() const;
};

/// Every intermediate artifact of the verification pipeline.
struct Analysis {
  HistoryTree tree;
  EstimateTable estimates;
  Mdp mdp;
  Mdp abstract_mdp;
  MdpSolution abstract_solution;
  HistoryPolicy ce;
  PomdpSolution optimal;
  TreeValues ce_values;
  ModuliSet moduli;
  BoundCore core;
};

Analysis analyze(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                 const VerifyOptions& options = {});

/// Full pipeline. Violations of gap <= 2 alpha + tol are recorded in the
/// report, with the offending history.
BoundReport verify_theorem(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                           const VerifyOptions& options = {});
BoundReport report_from(const Analysis& a, const std::string& estimator_name,
                        const VerifyOptions& options);

/// pi-bar = pi~ o phi evaluated on the fully observed MDP.
struct CorollaryReport {
  std::vector<std::vector<double>> gap;  // [k][s]
  BoundCore core;
  double worst_excess = 0.0;  // max gap - bound
  bool passed = true;
};

CorollaryReport corollary_gap(const Mdp& m, const Abstraction& ab, ModuliKind kind,
                              double tol = 1e-9);

struct AisEntry {
  NodeId node = 0;
  std::size_t step = 0;
  std::size_t action = 0;
  double ap1 = 0.0;
  double ap1_ceiling = 0.0;
  std::optional<double> ap2;
  double ap2_ceiling = 0.0;
};

struct AisResiduals {
  std::vector<AisEntry> entries;
  double worst_ap1_excess = 0.0;
  double worst_ap2_excess = 0.0;
};

/// Cost-sufficiency and self-prediction residuals of (g, c~, P~) at every
/// reachable (h, a), with the ceilings F^c(eta_k) and F^P(eta_k) + eta_{k+1}.
AisResiduals ais_residuals(const Pomdp& p, const Abstraction& ab, const Analysis& a);
AisResiduals ais_residuals(const Pomdp& p, const Abstraction& ab, const Estimator& g,
                           const VerifyOptions& options = {});

/// max over (s, z, a, k) of w1(P^phi_k(.|s,a), P~_k(.|z,a)) - F^P_k(d(phi(s), z)).
/// Exhaustive when `samples` is empty, otherwise that many uniform draws.
double kernel_error_check(const Mdp& m, const Abstraction& ab, const ModuliSet& moduli,
                    std::optional<std::size_t> samples = std::nullopt, std::uint64_t seed = 0);

}  // namespace cebound
