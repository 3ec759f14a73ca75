#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cebound/abstraction.hpp"
#include "cebound/estimator.hpp"
#include "cebound/pomdp.hpp"
#include "cebound/scenarios.hpp"

namespace cebound {

inline constexpr const char* kModelFormat = "cebound-model/1";

nlohmann::json to_json(const MetricSpace& space);
nlohmann::json to_json(const Pomdp& p);
nlohmann::json to_json(const Abstraction& ab);
/// Throws StructuralError for rule-only estimators with no serializable form.
nlohmann::json to_json(const Estimator& g, const Abstraction& ab);
nlohmann::json to_json(const Instance& instance);

/// Parsers throw ParseError naming the offending field.
MetricSpace metric_from_json(const nlohmann::json& j);
Pomdp pomdp_from_json(const nlohmann::json& j);
/// Accepts either explicit lambda tables or representative indices.
Abstraction abstraction_from_json(const nlohmann::json& j, const MetricSpace& source);
Estimator estimator_from_json(const nlohmann::json& j, const Abstraction& ab);
Instance instance_from_json(const nlohmann::json& j);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

/// Reachable history tree with beliefs, for debugging.
nlohmann::json tree_to_json(const HistoryTree& tree, const Pomdp& p);

}  // namespace cebound
