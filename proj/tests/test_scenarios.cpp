#include <doctest.h>

#include <algorithm>

#include "cebound/bounds.hpp"
#include "cebound/errors.hpp"
#include "cebound/model_io.hpp"
#include "cebound/scenarios.hpp"

using namespace cebound;
using nlohmann::json;

namespace {

BoundReport run(const ScenarioSpec& spec, ModuliKind kind = ModuliKind::kLinear) {
  const Instance inst = generate(spec);
  VerifyOptions opt;
  opt.moduli = kind;
  return verify_theorem(inst.pomdp, inst.abstraction, inst.estimator, opt);
}

}  // namespace

TEST_CASE("family names") {
  for (Family f : {Family::kBoundedNoise, Family::kIntermittent, Family::kQuantized, Family::kAdaptive,
                   Family::kEventTriggered, Family::kMeanField, Family::kRandom}) {
    CHECK(parse_family(to_string(f)) == f);
  }
  CHECK_THROWS_AS(parse_family("gaussian"), SpecError);
  CHECK(all_random_variants().size() == 12);
  for (const auto& v : all_random_variants()) {
    CHECK(parse_abstraction_variant(to_string(v.abstraction)) == v.abstraction);
    CHECK(parse_estimator_variant(to_string(v.estimator)) == v.estimator);
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_WITH_AS(generate({Family::kBoundedNoise, "x", {{"radius", 1}}}), doctest::Contains("radius"),
                       SpecError);
  CHECK_THROWS_AS(generate({Family::kBoundedNoise, "x", {{"r", -1}}}), SpecError);
  CHECK_THROWS_AS(generate({Family::kIntermittent, "x", {{"p", 1.5}}}), SpecError);
  CHECK_THROWS_AS(generate({Family::kBoundedNoise, "x", {{"horizon", 0}}}), SpecError);
  CHECK_THROWS_AS(generate({Family::kMeanField, "x", {{"particles", 0}}}), SpecError);
  CHECK_THROWS_AS(generate({Family::kRandom, "x", {{"estimator", "oracle"}}}), SpecError);
}

TEST_CASE("bounded noise has eta equal to the radius") {
  for (int r = 0; r <= 3; ++r) {
    const BoundReport rep = run({Family::kBoundedNoise, "bn", {{"r", r}}});
    CHECK(rep.passed());
    for (double e : rep.core.eta) CHECK(e == doctest::Approx(double(r)));
    if (r == 0) {
      for (double g : rep.gap) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));
      for (double b : rep.core.bound) CHECK(b == 0.0);
    }
  }
}

TEST_CASE("intermittent noise with p = 0 is bounded noise") {
  const auto a = run({Family::kIntermittent, "im", {{"r", 1}, {"R", 3}, {"p", 0.0}}});
  const auto b = run({Family::kBoundedNoise, "bn", {{"r", 1}}});
  for (std::size_t k = 0; k < a.core.bound.size(); ++k) {
    CHECK(a.core.eta[k] == doctest::Approx(b.core.eta[k]));
    CHECK(a.core.bound[k] == doctest::Approx(b.core.bound[k]));
    CHECK(a.gap[k] == doctest::Approx(b.gap[k]));
  }
}

TEST_CASE("quantized observations") {
  const Instance inst = generate({Family::kQuantized, "qz", {{"cells", 3}, {"width", 3}, {"r", 1}}});
  CHECK(inst.abstraction.target_size() == 3);
  const auto rep = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator);
  CHECK(rep.passed());
  for (double e : rep.core.eta) CHECK(e <= inst.notes.at("eta_ceiling") + 1e-12);
}

TEST_CASE("identifiable adaptive models learn the parameter") {
  const BoundReport rep = run({Family::kAdaptive, "ad", json::object()});
  CHECK(rep.passed());
  for (std::size_t k = 1; k < rep.core.eta.size(); ++k) CHECK(rep.core.eta[k] <= rep.core.eta[k - 1] + 1e-12);
  CHECK(rep.core.eta.back() == doctest::Approx(0.0).epsilon(1e-12));
  const BoundReport blind = run({Family::kAdaptive, "ad", {{"identifiable", false}}});
  CHECK(blind.passed());
  CHECK(blind.core.eta.back() >= rep.core.eta.back());
}

TEST_CASE("event-triggered transmissions follow the rule") {
  const Instance inst = generate({Family::kEventTriggered, "et", {{"r", 1}}});
  const EventTriggerStats st = simulate_event_triggered(inst, 2000, 1);
  CHECK(st.trajectories == 2000);
  CHECK(st.trigger_mismatches == 0);
  CHECK(st.recursion_mismatches == 0);
  CHECK(st.max_error <= 1.0);
  CHECK(st.transmissions > 0);
  const auto rep = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator);
  CHECK(rep.passed());
  for (double e : rep.core.eta) CHECK(e <= 1.0 + 1e-12);
}

TEST_CASE("mean-field closed-form moduli") {
  const ScenarioSpec spec{Family::kMeanField, "mf", {{"particles", 2}, {"grid", 4}, {"horizon", 2}}};
  const Instance inst = generate(spec);
  REQUIRE(inst.closed_form.has_value());
  const Mdp m = inst.pomdp.induced_mdp();
  const ModuliSet fitted = fit_moduli(m, inst.abstraction, ModuliKind::kEnvelope);
  for (std::size_t k = 0; k < fitted.cost.size(); ++k) {
    for (const auto& [x, y] : fitted.cost[k].breakpoints()) CHECK(y <= inst.closed_form->cost[k](x) + 1e-9);
  }
  for (std::size_t k = 0; k < fitted.dynamics.size(); ++k) {
    for (const auto& [x, y] : fitted.dynamics[k].breakpoints()) {
      CHECK(y <= inst.closed_form->dynamics[k](x) + 1e-9);
    }
  }
  CHECK(mean_field_coupling_check(spec).worst_excess <= 1e-12);
  CHECK(run(spec).passed());
}

TEST_CASE("large mean-field populations are bound-only") {
  const ScenarioSpec spec{Family::kMeanField, "mf", {{"particles", 4}, {"mc_samples", 200}}};
  CHECK(is_bound_only(spec));
  CHECK_THROWS_AS(generate(spec), SizingError);
  const BoundOnlyResult r = mean_field_bound_only(spec);
  CHECK(r.samples == 200);
  CHECK(r.core.bound.front() > 0.0);
  CHECK(r.mc_stderr >= 0.0);
}

TEST_CASE("random instances are reproducible") {
  for (const auto& v : all_random_variants()) {
    const Instance a = random_instance(42, RandomSizes{}, v);
    const Instance b = random_instance(42, RandomSizes{}, v);
    CHECK(to_json(a).dump() == to_json(b).dump());
  }
  CHECK(to_json(random_instance(1, RandomSizes{})).dump() != to_json(random_instance(2, RandomSizes{})).dump());
  const Instance g = generate({Family::kRandom, "r", {{"seed", 42}, {"abstraction", "partition-uniform"}}});
  CHECK(to_json(g.pomdp).dump() ==
        to_json(random_instance(42, RandomSizes{}, {AbstractionVariant::kPartitionUniform})).at("pomdp").dump());
}

TEST_CASE("single-state instances have no estimation error") {
  const Instance inst = random_instance(3, RandomSizes{1, 2, 2, 3});
  const auto rep = verify_theorem(inst.pomdp, inst.abstraction, inst.estimator);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(rep.core.eta[k] == 0.0);
    CHECK(rep.gap[k] == doctest::Approx(0.0).epsilon(1e-12));
  }
}
