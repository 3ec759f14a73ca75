#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

#include "cebound/bounds.hpp"

namespace cebound {

/// 17 significant digits, '.' decimal separator, independent of locale.
std::string format_double(double x);

inline constexpr const char* kCsvHeader = "instance_id,t,eta,eps,delta,lipV,alpha,bound,gap,slack";

/// One row per epoch, t 1-based. delta is 0 at the last epoch.
std::string csv_rows(const BoundReport& report);

nlohmann::json to_json(const BoundReport& report);
/// Throws ParseError on missing or malformed fields.
BoundReport report_from_json(const nlohmann::json& j);

/// Additive decomposition of alpha_t (t 1-based) with the dominant term
/// marked. Throws StructuralError when t is out of range.
std::string explain(const BoundReport& report, std::size_t t);

}  // namespace cebound
