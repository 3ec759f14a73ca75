#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cebound/abstraction.hpp"
#include "cebound/bounds.hpp"
#include "cebound/estimator.hpp"
#include "cebound/pomdp.hpp"

namespace cebound {

enum class Family { kBoundedNoise, kIntermittent, kQuantized, kAdaptive, kEventTriggered, kMeanField, kRandom };

const char* to_string(Family family);
/// Throws SpecError on unknown names.
Family parse_family(const std::string& name);

/// Family plus its parameters. Parameters are read lazily by `generate` and
/// checked against their documented ranges there.
struct ScenarioSpec {
  Family family = Family::kBoundedNoise;
  std::string id;
  nlohmann::json params = nlohmann::json::object();
};

/// A concrete finite instance ready for verification.
struct Instance {
  std::string id;
  Family family = Family::kBoundedNoise;
  Pomdp pomdp;
  Abstraction abstraction;
  Estimator estimator;
  /// Closed-form moduli where the family has them (mean_field).
  std::optional<ModuliSet> closed_form;
  /// Family constants: radii, eta ceilings, discretization slack, targets.
  std::map<std::string, double> notes;
};

/// Builds the instance. Throws SpecError on out-of-range parameters.
Instance generate(const ScenarioSpec& spec);

enum class AbstractionVariant { kIdentity, kPartitionDirac, kPartitionUniform };
enum class EstimatorVariant { kObservationMap, kMapPosterior, kPosteriorMeanRepresentative, kHashed };

struct RandomVariant {
  AbstractionVariant abstraction = AbstractionVariant::kIdentity;
  EstimatorVariant estimator = EstimatorVariant::kMapPosterior;
};

const char* to_string(AbstractionVariant v);
const char* to_string(EstimatorVariant v);
AbstractionVariant parse_abstraction_variant(const std::string& name);
EstimatorVariant parse_estimator_variant(const std::string& name);
/// Every abstraction x estimator combination.
std::vector<RandomVariant> all_random_variants();

struct RandomSizes {
  std::size_t states = 3;
  std::size_t observations = 3;
  std::size_t actions = 2;
  std::size_t horizon = 3;
};

/// Reproducible random instance. The metric is the shortest-path closure of
/// random positive edge weights; kernels are sparse random joint laws on S x Y.
Instance random_instance(std::uint64_t seed, const RandomSizes& sizes,
                         const RandomVariant& variant = {});

/// Same dynamics and costs with Y = S and y_t = s_t.
Pomdp fully_observed(const Pomdp& p);
/// Same dynamics and costs with a single observation.
Pomdp uninformative(const Pomdp& p);

/// Trigger statistics of an event_triggered instance under uniformly random
/// actions.
struct EventTriggerStats {
  std::size_t trajectories = 0;
  std::size_t steps = 0;
  std::size_t transmissions = 0;
  /// Steps where a transmission happened without d(x, x_pred) > r or vice versa.
  std::size_t trigger_mismatches = 0;
  /// Steps where the next prediction disagrees with the estimator recursion.
  std::size_t recursion_mismatches = 0;
  double max_error = 0.0;  // max d(x_t, x_{t|t})
};

EventTriggerStats simulate_event_triggered(const Instance& instance, std::size_t trajectories,
                                           std::uint64_t seed);

/// Shared-noise coupling of the mean_field dynamics against exact w1.
struct CouplingCheck {
  std::size_t pairs = 0;
  double worst_excess = 0.0;  // max of w1 - coupling cost; <= 0 when the coupling dominates
};

/// Over every (s, s', a, k), or `samples` uniform draws of them.
CouplingCheck mean_field_coupling_check(const ScenarioSpec& spec,
                                        std::optional<std::size_t> samples = std::nullopt,
                                        std::uint64_t seed = 0);

/// mean_field instances above this particle count skip the exact oracle.
inline constexpr std::size_t kMeanFieldOracleParticles = 3;
bool is_bound_only(const ScenarioSpec& spec);

/// Closed-form bound with eta at its ceiling, against a Monte Carlo estimate
/// of the certainty-equivalent cost from the initial state.
struct BoundOnlyResult {
  BoundCore core;
  double mc_value = 0.0;
  double mc_stderr = 0.0;
  std::size_t samples = 0;
  std::map<std::string, double> notes;
};

BoundOnlyResult mean_field_bound_only(const ScenarioSpec& spec);

}  // namespace cebound
