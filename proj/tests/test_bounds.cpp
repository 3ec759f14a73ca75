#include <doctest.h>

#include <random>

#include "cebound/bounds.hpp"
#include "cebound/errors.hpp"
#include "cebound/scenarios.hpp"
#include "fixtures.hpp"

using namespace cebound;

namespace {

ModuliSet hand_moduli() {
  return {{Modulus::linear(2.0), Modulus::linear(1.0, 0.1), Modulus::linear(3.0)},
          {Modulus::linear(0.5), Modulus::linear(1.0)}};
}

Pomdp scale_costs(const Pomdp& p, double factor) {
  std::vector<double> c = p.costs().data();
  for (auto& x : c) x *= factor;
  return Pomdp(p.states(), p.observation_labels(), p.action_labels(), p.initial(), p.transitions(),
               CostTable(p.costs().steps(), p.num_states(), p.num_actions(), c), p.horizon());
}

}  // namespace

TEST_CASE("hand-computed bound terms") {
  const BoundCore c = theorem_bound({0.5, 1.0, 0.25}, hand_moduli(), {9.0, 4.0, 3.0});
  CHECK(c.eps[0] == doctest::Approx(1.0));
  CHECK(c.eps[1] == doctest::Approx(1.1));
  CHECK(c.eps[2] == doctest::Approx(0.75));
  REQUIRE(c.delta.size() == 2);
  CHECK(c.delta[0] == doctest::Approx(1.25));
  CHECK(c.delta[1] == doctest::Approx(1.25));
  CHECK(c.alpha[2] == doctest::Approx(0.75));
  CHECK(c.alpha[1] == doctest::Approx(5.6));
  CHECK(c.alpha[0] == doctest::Approx(11.6));
  CHECK(c.bound[0] == doctest::Approx(23.2));
  for (std::size_t k = 0; k < 3; ++k) {
    double total = 0.0;
    for (const auto& term : alpha_decomposition(c, k)) total += term.value;
    CHECK(total == doctest::Approx(c.alpha[k]));
  }
  CHECK(alpha_decomposition(c, 0).size() == 5);
}

TEST_CASE("input checks") {
  CHECK_THROWS_AS(theorem_bound({0.5, -1.0, 0.0}, hand_moduli(), {0, 0, 0}), StructuralError);
  CHECK_THROWS_AS(theorem_bound({0.5, 1.0}, hand_moduli(), {0, 0, 0}), StructuralError);
  CHECK(parse_moduli_kind("concave-envelope") == ModuliKind::kEnvelope);
  CHECK(parse_moduli_kind("linear") == ModuliKind::kLinear);
  CHECK_THROWS_AS(parse_moduli_kind("cubic"), ParseError);
}

TEST_CASE("zero estimation error gives a zero bound") {
  const BoundCore c = theorem_bound({0.0, 0.0, 0.0}, {{Modulus::linear(2.0), Modulus::linear(1.0), Modulus::linear(3.0)},
                                                      {Modulus::linear(0.5), Modulus::linear(1.0)}},
                                    {9.0, 4.0, 3.0});
  for (double b : c.bound) CHECK(b == 0.0);
}

TEST_CASE("bound is monotone in eta") {
  std::mt19937_64 gen(19);
  const ModuliSet m = hand_moduli();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(3), b(3);
    for (int k = 0; k < 3; ++k) {
      a[k] = fixtures::uniform01(gen) * 2.0;
      b[k] = a[k] + fixtures::uniform01(gen);
    }
    const auto ca = theorem_bound(a, m, {1.0, 2.0, 0.5});
    const auto cb = theorem_bound(b, m, {1.0, 2.0, 0.5});
    for (int k = 0; k < 3; ++k) CHECK(ca.bound[k] <= cb.bound[k] + 1e-12);
  }
}

TEST_CASE("frozen eta of the two-state model") {
  const Pomdp p = fixtures::two_state_pomdp();
  const Abstraction id = Abstraction::identity(p.states());
  const HistoryTree tree = HistoryTree::build(p);
  const Estimator g = Estimator::last_observation({0, 1});
  const auto eta = compute_eta(tree, id, g.tabulate(tree, 2));
  REQUIRE(eta.size() == 2);
  CHECK(eta[0] == doctest::Approx(0.3));
  CHECK(eta[1] == doctest::Approx(0.4484848484848485).epsilon(1e-12));
  const BoundReport r = verify_theorem(p, id, g);
  CHECK(r.passed());
  CHECK(r.core.eta == eta);
}

TEST_CASE("certainty-equivalent policy reads the abstract policy") {
  const Pomdp p = fixtures::two_state_pomdp();
  const HistoryTree tree = HistoryTree::build(p);
  const EstimateTable est = Estimator::last_observation({1, 0}).tabulate(tree, 2);
  const MarkovPolicy pi{{{0, 1}, {1, 0}}};
  const HistoryPolicy mu = ce_policy(pi, tree, est);
  for (std::size_t k = 0; k < 2; ++k) {
    for (NodeId id : tree.level(k)) CHECK(*mu.action[id] == pi(k, 1 - tree.node(id).observation));
  }
}

TEST_CASE("random instances satisfy the bound") {
  for (const RandomVariant& v : all_random_variants()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Instance inst = random_instance(seed, RandomSizes{3, 3, 2, 3}, v);
      for (ModuliKind kind : {ModuliKind::kLinear, ModuliKind::kEnvelope}) {
        VerifyOptions opt;
        opt.moduli = kind;
        const BoundReport r = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, opt);
        CHECK(r.passed());
        for (double g : r.gap) CHECK(g >= -1e-12);
        CHECK(r.worst_slack() >= -1e-9);
      }
    }
  }
}

TEST_CASE("envelope moduli never loosen the bound") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = random_instance(seed, RandomSizes{4, 3, 2, 3},
                                          {AbstractionVariant::kPartitionUniform, EstimatorVariant::kMapPosterior});
    VerifyOptions lin, env;
    env.moduli = ModuliKind::kEnvelope;
    const auto a = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, lin);
    const auto b = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, env);
    for (std::size_t k = 0; k < a.core.bound.size(); ++k) CHECK(b.core.bound[k] <= a.core.bound[k] + 1e-9);
  }
}

TEST_CASE("scaling costs scales gap and bound") {
  const Instance inst = random_instance(4, RandomSizes{3, 3, 2, 3});
  const auto a = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator);
  const auto b = verify_theorem(scale_costs(inst.pomdp, 4.0), inst.abstraction, inst.estimator);
  CHECK(a.core.eta == b.core.eta);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(b.gap[k] == doctest::Approx(4.0 * a.gap[k]).epsilon(1e-9));
    CHECK(b.core.bound[k] == doctest::Approx(4.0 * a.core.bound[k]).epsilon(1e-9));
  }
}

TEST_CASE("fully observed instances with the identity estimator") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance inst = random_instance(seed, RandomSizes{3, 3, 2, 3});
    const Pomdp full = fully_observed(inst.pomdp);
    std::vector<std::size_t> map(full.num_states());
    for (std::size_t s = 0; s < map.size(); ++s) map[s] = s;
    const auto r = verify_theorem(full, Abstraction::identity(full.states()), Estimator::last_observation(map));
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(r.core.eta[k] == 0.0);
      CHECK(r.core.bound[k] == 0.0);
      CHECK(r.gap[k] == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("recursive Lipschitz option only loosens the bound") {
  const Instance inst = random_instance(8, RandomSizes{3, 3, 2, 3});
  VerifyOptions exact, rec;
  rec.recursive_lipschitz = true;
  const auto a = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, exact);
  const auto b = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, rec);
  CHECK(b.passed());
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.core.bound[k] <= b.core.bound[k] + 1e-9);
}

TEST_CASE("state-only abstraction gap") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp m = fixtures::random_mdp(gen, 4, 2, 3);
    const auto id = corollary_gap(m, Abstraction::identity(m.states()), ModuliKind::kLinear);
    for (const auto& row : id.gap) {
      for (double g : row) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));
    }
    const auto q = corollary_gap(m, Abstraction::quantization(m.states(), {0, 0, 1, 1}, {0, 3}),
                                 ModuliKind::kEnvelope);
    CHECK(q.passed);
    CHECK(q.worst_excess <= 1e-9);
  }
}

TEST_CASE("abstract kernel error stays within the dynamics modulus") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp m = fixtures::random_mdp(gen, 5, 2, 3);
    const Abstraction ab = Abstraction::quantization_uniform(m.states(), {0, 1, 0, 2, 1}, {0, 1, 3});
    for (ModuliKind kind : {ModuliKind::kLinear, ModuliKind::kEnvelope}) {
      const ModuliSet f = fit_moduli(m, ab, kind);
      CHECK(kernel_error_check(m, ab, f) <= 1e-9);
      CHECK(kernel_error_check(m, ab, f, 50, 3) <= 1e-9);
    }
  }
}

TEST_CASE("information-state residuals stay under their ceilings") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance inst = random_instance(seed, RandomSizes{3, 3, 2, 3},
                                          {AbstractionVariant::kPartitionDirac, EstimatorVariant::kHashed});
    const AisResiduals r = ais_residuals(inst.pomdp, inst.abstraction, inst.estimator);
    CHECK(r.worst_ap1_excess <= 1e-9);
    CHECK(r.worst_ap2_excess <= 1e-9);
    CHECK_FALSE(r.entries.empty());
  }
}

TEST_CASE("constant costs fit zero cost moduli") {
  std::mt19937_64 gen(31);
  const Mdp base = fixtures::random_mdp(gen, 3, 2, 2);
  const Mdp m(base.states(), 2, base.transitions(), CostTable(2, 3, 2, std::vector<double>(12, 1.5)), 2);
  const ModuliSet f = fit_moduli(m, Abstraction::identity(m.states()), ModuliKind::kLinear);
  for (const auto& c : f.cost) CHECK(c(10.0) == 0.0);
}
