// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cebound/bounds.hpp"
#include "cebound/errors.hpp"
#include "cebound/scenarios.hpp"
#include "cebound/transport.hpp"
#include "oracles.hpp"

using namespace cebound;
using nlohmann::json;

namespace {

constexpr double kTol = 1e-9;

struct Case {
  Instance instance;
  Analysis analysis;
  BoundReport report;
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Case make_case(Instance inst, ModuliKind kind = ModuliKind::kLinear) {
  VerifyOptions opt;
  opt.moduli = kind;
  opt.tol = kTol;
  Analysis a = analyze(inst.pomdp, inst.abstraction, inst.estimator, opt);
  BoundReport r = report_from(a, inst.estimator.name(), opt);
  r.instance_id = inst.id;
  return {std::move(inst), std::move(a), std::move(r)};
}

std::size_t draw(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(gen() % (hi - lo + 1));
}

/// 240 random instances: every abstraction x estimator variant, 20 seeds
/// each, sizes |S|,|Y| in 2..4, |A| in 2..3, T in 2..4.
std::vector<Case> random_suite() {
  std::vector<Case> out;
  std::uint64_t seed = 1000;
  for (const RandomVariant& v : all_random_variants()) {
    for (int i = 0; i < 20; ++i, ++seed) {
      std::mt19937_64 gen(seed);
      const RandomSizes sizes{draw(gen, 2, 4), draw(gen, 2, 4), draw(gen, 2, 3), draw(gen, 2, 4)};
      Instance inst = random_instance(seed, sizes, v);
      inst.id = fmt("random-%llu-%s-%s", static_cast<unsigned long long>(seed), to_string(v.abstraction),
                    to_string(v.estimator));
      out.push_back(make_case(std::move(inst)));
    }
  }
  return out;
}

std::vector<Case> family_suite() {
  const std::vector<ScenarioSpec> specs = {
      {Family::kBoundedNoise, "bounded_noise-r1", {{"r", 1}}},
      {Family::kBoundedNoise, "bounded_noise-n6", {{"n", 6}, {"r", 2}}},
      {Family::kIntermittent, "intermittent", {{"r", 1}, {"R", 2}, {"p", 0.2}}},
      {Family::kQuantized, "quantized", json::object()},
      {Family::kQuantized, "quantized-6", {{"cells", 2}, {"width", 3}}},
      {Family::kAdaptive, "adaptive", json::object()},
      {Family::kAdaptive, "adaptive-blind", {{"identifiable", false}}},
      {Family::kEventTriggered, "event_triggered", json::object()},
      {Family::kMeanField, "mean_field-2", {{"particles", 2}}},
      {Family::kMeanField, "mean_field-3", {{"particles", 3}, {"grid", 3}, {"horizon", 2}}},
  };
  std::vector<Case> out;
  for (const auto& spec : specs) out.push_back(make_case(generate(spec)));
  return out;
}

Outcome c1_bound_dominance(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t histories = 0, violations = 0;
  double worst = INFINITY;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      histories += c.analysis.tree.size();
      violations += c.report.violations.size();
      worst = std::min(worst, c.report.worst_slack());
    }
  }
  o.pass = violations == 0 && random.size() >= 200;
  o.detail = fmt("%zu random + %zu family instances, %zu histories, %zu violations, min slack %.3g",
                 random.size(), families.size(), histories, violations, worst);
  return o;
}

Outcome c2_zero_error(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t n = 0;
  double worst_gap = 0.0, worst_bound = 0.0;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      const Pomdp full = fully_observed(c.instance.pomdp);
      std::vector<std::size_t> map(full.num_states());
      for (std::size_t s = 0; s < map.size(); ++s) map[s] = s;
      const BoundReport r = verify_theorem(full, Abstraction::identity(full.states()),
                                           Estimator::last_observation(map));
      for (std::size_t k = 0; k < r.gap.size(); ++k) {
        worst_gap = std::max(worst_gap, r.gap[k]);
        worst_bound = std::max(worst_bound, r.core.bound[k]);
        if (r.core.eta[k] != 0.0) o.pass = false;
      }
      ++n;
    }
  }
  o.pass = o.pass && worst_bound == 0.0 && worst_gap <= kTol;
  o.detail = fmt("%zu fully observed counterparts, max bound %.3g, max gap %.3g", n, worst_bound, worst_gap);
  return o;
}

Outcome c3_bounded_noise() {
  Outcome o;
  std::vector<double> bound_t1;
  double worst_formula = 0.0, worst_slack = INFINITY;
  for (int r = 0; r <= 3; ++r) {
    const Instance inst = generate({Family::kBoundedNoise, "bn", {{"r", r}}});
    const BoundReport rep = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator);
    const Mdp m = inst.pomdp.induced_mdp();
    const ModuliSet f = fit_moduli(m, Abstraction::identity(m.states()), ModuliKind::kLinear);
    const auto V = backward_induction(m).values;
    const std::size_t T = m.horizon();
    std::vector<double> lip(T + 1);
    for (std::size_t k = 0; k <= T; ++k) lip[k] = lipschitz_of(V[k], m.states());
    for (std::size_t k = 0; k < T; ++k) {
      if (f.cost[k].offset() != 0.0) o.pass = false;
      double LM = f.cost[k].slope();
      for (std::size_t j = k; j + 1 < T; ++j) {
        LM += (1.0 + f.dynamics[j].slope()) * lip[j + 1] + f.cost[j + 1].slope();
      }
      worst_formula = std::max(worst_formula, std::abs(rep.core.bound[k] - 2.0 * r * LM));
      worst_slack = std::min(worst_slack, rep.core.bound[k] - rep.gap[k]);
    }
    if (!rep.passed()) o.pass = false;
    bound_t1.push_back(rep.core.bound[0]);
  }
  double nonlinearity = 0.0;
  for (int r = 0; r <= 3; ++r) nonlinearity = std::max(nonlinearity, std::abs(bound_t1[r] - r * bound_t1[1]));
  o.pass = o.pass && worst_formula <= kTol && worst_slack >= -kTol && nonlinearity <= kTol;
  o.detail = fmt("bound(t=1) = %.6g per unit r, |bound - 2rL| <= %.3g, nonlinearity %.3g, min slack %.3g",
                 bound_t1[1], worst_formula, nonlinearity, worst_slack);
  return o;
}

double core_distance(const BoundCore& a, const BoundCore& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.bound.size(); ++k) {
    d = std::max({d, std::abs(a.eta[k] - b.eta[k]), std::abs(a.bound[k] - b.bound[k])});
  }
  return d;
}

Outcome c4_intermittent() {
  Outcome o;
  double worst = 0.0;
  std::size_t pairs = 0;
  auto core = [](const ScenarioSpec& s) {
    const Instance inst = generate(s);
    return verify_theorem(inst.pomdp, inst.abstraction, inst.estimator).core;
  };
  for (int r = 0; r <= 2; ++r) {
    for (int R = r; R <= 3; ++R) {
      const auto bn_r = core({Family::kBoundedNoise, "bn", {{"r", r}}});
      worst = std::max(worst, core_distance(core({Family::kIntermittent, "im", {{"r", r}, {"R", R}, {"p", 0.0}}}), bn_r));
      const auto bn_R = core({Family::kBoundedNoise, "bn", {{"r", R}}});
      worst = std::max(worst, core_distance(core({Family::kIntermittent, "im", {{"r", R}, {"R", R}, {"p", 0.3}}}), bn_R));
      pairs += 2;
    }
  }
  o.pass = worst <= kTol;
  o.detail = fmt("%zu reductions, max |eta or bound difference| %.3g", pairs, worst);
  return o;
}

Outcome c5_quantized() {
  Outcome o;
  std::size_t n = 0;
  double worst = -INFINITY;
  for (int cells = 2; cells <= 4; ++cells) {
    for (int width = 1; width <= 4; ++width) {
      for (int r = 0; r <= 2; ++r) {
        const ScenarioSpec spec{Family::kQuantized, "qz", {{"cells", cells}, {"width", width}, {"r", r},
                                                           {"horizon", cells * width > 9 ? 2 : 3}}};
        Instance inst;
        try {
          inst = generate(spec);
        } catch (const SpecError&) {
          continue;
        }
        const Abstraction& ab = inst.abstraction;
        double R = 0.0;
        for (std::size_t s = 0; s < ab.source_size(); ++s) {
          const std::size_t rep = support(ab.lambda_p(ab(s)))[0];
          R = std::max(R, inst.pomdp.states()(s, rep));
        }
        const BoundReport rep = verify_theorem(inst.pomdp, ab, inst.estimator);
        for (double e : rep.core.eta) worst = std::max(worst, e - (r + 2.0 * R));
        if (!rep.passed()) o.pass = false;
        ++n;
      }
    }
  }
  o.pass = o.pass && n > 0 && worst <= kTol;
  o.detail = fmt("%zu quantized instances, max eta - (r + 2R) = %.3g", n, worst);
  return o;
}

Outcome c6_residuals(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t entries = 0;
  double ap1 = -INFINITY, ap2 = -INFINITY;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      const AisResiduals r = ais_residuals(c.instance.pomdp, c.instance.abstraction, c.analysis);
      entries += r.entries.size();
      ap1 = std::max(ap1, r.worst_ap1_excess);
      ap2 = std::max(ap2, r.worst_ap2_excess);
    }
  }
  o.pass = ap1 <= kTol && ap2 <= kTol;
  o.detail = fmt("%zu (history, action) pairs, max cost excess %.3g, max prediction excess %.3g", entries, ap1, ap2);
  return o;
}

Outcome c7_kernel_error(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t n = 0;
  double worst = -INFINITY;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      if (c.analysis.mdp.num_states() > 6) continue;
      for (ModuliKind kind : {ModuliKind::kLinear, ModuliKind::kEnvelope}) {
        const ModuliSet f = fit_moduli(c.analysis.mdp, c.instance.abstraction, kind);
        worst = std::max(worst, kernel_error_check(c.analysis.mdp, c.instance.abstraction, f));
      }
      ++n;
    }
  }
  o.pass = n > 0 && worst <= kTol;
  o.detail = fmt("%zu instances with |S| <= 6, exhaustive, max lhs - rhs %.3g", n, worst);
  return o;
}

Outcome c8_lipschitz_recursion(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t n = 0, literal_failures = 0, literal_checks = 0;
  double worst = -INFINITY;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      const Mdp& m = c.analysis.mdp;
      const LinearConstants L = mdp_lipschitz_constants(m);
      const auto V = backward_induction(m).values;
      const std::size_t T = m.horizon();
      std::vector<double> lip(T + 1);
      for (std::size_t k = 0; k <= T; ++k) lip[k] = lipschitz_of(V[k], m.states());
      for (std::size_t k = 0; k < T; ++k) {
        // kernel of step k maps epoch k to epoch k + 1
        const double rhs = L.cost[k] + (k + 1 < T ? L.dynamics[k] * lip[k + 1] : 0.0);
        worst = std::max(worst, lip[k] - rhs);
        if (k + 2 < T) {
          ++literal_checks;
          literal_failures += lip[k] > L.cost[k] + L.dynamics[k + 1] * lip[k + 1] + kTol;
        }
      }
      ++n;
    }
  }
  o.pass = worst <= kTol;
  o.detail = fmt("%zu instances, max Lip(V_t) - rhs %.3g; with the next-step kernel constant %zu/%zu fail", n,
                 worst, literal_failures, literal_checks);
  return o;
}

Outcome c9_state_abstraction(const std::vector<Case>& random, const std::vector<Case>& families) {
  Outcome o;
  std::size_t n = 0;
  double worst = -INFINITY, worst_t1 = -INFINITY;
  for (const auto* suite : {&random, &families}) {
    for (const Case& c : *suite) {
      const Abstraction& ab = c.instance.abstraction;
      bool dirac = true;
      for (std::size_t z = 0; z < ab.target_size(); ++z) {
        dirac = dirac && support(ab.lambda_p(z)).size() == 1 && support(ab.lambda_c(z)).size() == 1;
      }
      if (!dirac) continue;
      for (ModuliKind kind : {ModuliKind::kLinear, ModuliKind::kEnvelope}) {
        const CorollaryReport r = corollary_gap(c.analysis.mdp, ab, kind, kTol);
        worst = std::max(worst, r.worst_excess);
        for (std::size_t s = 0; s < r.gap[0].size(); ++s) {
          worst_t1 = std::max(worst_t1, r.gap[0][s] - r.core.bound[0]);
        }
        if (!r.passed) o.pass = false;
      }
      ++n;
    }
  }
  o.pass = o.pass && n > 0 && worst_t1 <= kTol;
  o.detail = fmt("%zu quantized abstractions, max gap - bound at t=1 %.3g (all t %.3g)", n, worst_t1, worst);
  return o;
}

Outcome c10_event_triggered() {
  Outcome o;
  const Instance inst = generate({Family::kEventTriggered, "et", json::object()});
  const EventTriggerStats st = simulate_event_triggered(inst, 10000, 2026);
  const double r = inst.notes.at("r");
  o.pass = st.trajectories == 10000 && st.trigger_mismatches == 0 && st.recursion_mismatches == 0 &&
           st.max_error <= r + 1e-12;
  std::size_t verified = 0;
  double worst = INFINITY;
  for (int rr = 0; rr <= 2; ++rr) {
    for (int nx : {4, 5, 6}) {
      const Instance e = generate({Family::kEventTriggered, "et", {{"r", rr}, {"nx", nx}}});
      const BoundReport rep = verify_theorem(e.pomdp, e.abstraction, e.estimator);
      worst = std::min(worst, rep.worst_slack());
      if (!rep.passed()) o.pass = false;
      ++verified;
    }
  }
  o.detail = fmt("%zu steps, %zu transmissions, %zu trigger / %zu recursion mismatches, max error %.3g; "
                 "%zu instances verified, min slack %.3g",
                 st.steps, st.transmissions, st.trigger_mismatches, st.recursion_mismatches, st.max_error, verified,
                 worst);
  return o;
}

Outcome c11_mean_field() {
  Outcome o;
  const std::vector<ScenarioSpec> specs = {
      {Family::kMeanField, "mf2", {{"particles", 2}}},
      {Family::kMeanField, "mf2-heavy", {{"particles", 2}, {"weights", {1, 3}}}},
      {Family::kMeanField, "mf3", {{"particles", 3}, {"grid", 3}, {"horizon", 2}}},
  };
  double worst = -INFINITY, linear_over = -INFINITY, coupling = -INFINITY;
  std::size_t pairs = 0;
  for (const auto& spec : specs) {
    const Instance inst = generate(spec);
    const ModuliSet& cf = *inst.closed_form;
    const Mdp m = inst.pomdp.induced_mdp();
    const double diam = inst.abstraction.target().diameter();
    // concave piecewise-linear against linear: breakpoints and tail decide
    const ModuliSet env = fit_moduli(m, inst.abstraction, ModuliKind::kEnvelope);
    auto compare = [&](const Modulus& fitted, const Modulus& closed) {
      for (const auto& [x, y] : fitted.breakpoints()) worst = std::max(worst, y - closed(x));
      if (fitted.tail_slope() > closed.tail_slope()) worst = INFINITY;
    };
    for (std::size_t k = 0; k < env.cost.size(); ++k) compare(env.cost[k], cf.cost[k]);
    for (std::size_t k = 0; k < env.dynamics.size(); ++k) compare(env.dynamics[k], cf.dynamics[k]);
    const ModuliSet lin = fit_moduli(m, inst.abstraction, ModuliKind::kLinear);
    for (std::size_t k = 0; k < lin.cost.size(); ++k) linear_over = std::max(linear_over, lin.cost[k](diam) - cf.cost[k](diam));
    for (std::size_t k = 0; k < lin.dynamics.size(); ++k) {
      linear_over = std::max(linear_over, lin.dynamics[k](diam) - cf.dynamics[k](diam));
    }
    const CouplingCheck cc = mean_field_coupling_check(spec);
    coupling = std::max(coupling, cc.worst_excess);
    pairs += cc.pairs;
  }
  o.pass = worst <= kTol && coupling <= kTol;
  o.detail = fmt("max envelope - closed form %.3g (single-slope fit exceeds by %.3g at the diameter); "
                 "%zu coupled pairs, max w1 - coupling %.3g",
                 worst, linear_over, pairs, coupling);
  return o;
}

Outcome c12_oracles(const std::vector<Case>& random) {
  Outcome o;
  std::size_t full = 0, blind = 0, enumerated = 0;
  double worst = 0.0;
  for (const Case& c : random) {
    const Pomdp fo = fully_observed(c.instance.pomdp);
    const HistoryTree tree = HistoryTree::build(fo);
    const PomdpSolution sol = optimal_value(fo, tree);
    const MdpSolution mdp = backward_induction(fo.induced_mdp());
    for (std::size_t k = 0; k < tree.depth(); ++k) {
      for (NodeId id : tree.level(k)) {
        worst = std::max(worst, std::abs(sol.values[id] - mdp.values[k][tree.node(id).observation]));
      }
    }
    ++full;

    const Pomdp un = uninformative(c.instance.pomdp);
    const PomdpSolution usol = optimal_value(un);
    std::vector<double> init(un.num_states());
    for (std::size_t s = 0; s < init.size(); ++s) init[s] = un.initial()[s];
    worst = std::max(worst, std::abs(usol.values[0] - oracles::open_loop_optimum(un.induced_mdp(), init)));
    ++blind;

    const Mdp& m = c.analysis.mdp;
    if (m.num_states() * m.horizon() <= 12 && std::pow(double(m.num_actions()), double(m.num_states() * m.horizon())) <= 6e5) {
      const auto best = oracles::enumerate_markov_policies(m);
      const auto bi = backward_induction(m);
      for (std::size_t s = 0; s < best.size(); ++s) worst = std::max(worst, std::abs(bi.values[0][s] - best[s]));
      ++enumerated;
    }
  }
  o.pass = worst <= kTol && enumerated > 0;
  o.detail = fmt("%zu fully observed, %zu uninformative, %zu enumerated MDPs, max difference %.3g", full, blind,
                 enumerated, worst);
  return o;
}

Outcome c13_transport() {
  Outcome o;
  std::mt19937_64 gen(13);
  auto uni = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  auto random_dist = [&](std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = uni() < 0.3 ? 0.0 : uni();
    w[gen() % n] += 0.1;
    return Dist::normalized(w);
  };
  double cdf_err = 0.0, lip_err = 0.0, dual_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + i % 29;
    const double step = 0.25 + uni();
    const MetricSpace path = MetricSpace::path(n, step);
    const Dist mu = random_dist(n), nu = random_dist(n);
    const double w = w1(mu, nu, path);
    cdf_err = std::max(cdf_err, std::abs(w - oracles::sorted_cdf_w1(mu, nu, step)));
    const auto f = w1_potential(mu, nu, path);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) lip_err = std::max(lip_err, f[a] - f[b] - path(a, b));
    }
    dual_err = std::max(dual_err, std::abs(mu.expect(f) - nu.expect(f) - w));
  }
  o.pass = cdf_err <= kTol && lip_err <= kTol && dual_err <= kTol;
  o.detail = fmt("1000 pairs on path metrics (2..30 points), max |w1 - cdf| %.3g, potential Lipschitz excess %.3g, "
                 "dual gap %.3g",
                 cdf_err, lip_err, dual_err);
  return o;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  bool all = true;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("C%-2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  std::vector<Case> random, families;
  try {
    random = random_suite();
    families = family_suite();
  } catch (const std::exception& e) {
    std::printf("suite construction failed: %s\n", e.what());
    return 1;
  }

  report(1, "bound dominance", [&] { return c1_bound_dominance(random, families); });
  report(2, "zero estimation error", [&] { return c2_zero_error(random, families); });
  report(3, "bounded-noise closed form", c3_bounded_noise);
  report(4, "intermittent reduction", c4_intermittent);
  report(5, "quantization eta ceiling", c5_quantized);
  report(6, "information-state residuals", [&] { return c6_residuals(random, families); });
  report(7, "abstract kernel error", [&] { return c7_kernel_error(random, families); });
  report(8, "value Lipschitz recursion", [&] { return c8_lipschitz_recursion(random, families); });
  report(9, "state-only abstraction gap", [&] { return c9_state_abstraction(random, families); });
  report(10, "event-triggered invariant", c10_event_triggered);
  report(11, "mean-field moduli", c11_mean_field);
  report(12, "oracle cross-validation", [&] { return c12_oracles(random); });
  report(13, "transport correctness", c13_transport);

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s (%.1f s)\n", all ? "ALL PASS" : "SOME CRITERIA FAILED", secs);
  return all ? 0 : 1;
}
