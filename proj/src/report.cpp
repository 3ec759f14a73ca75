#include "cebound/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cebound/errors.hpp"

namespace cebound {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // decimal comma under some LC_NUMERIC locales
  for (char* c = buf; *c; ++c) {
    if (*c == ',') *c = '.';
  }
  return buf;
}

std::string csv_rows(const BoundReport& report) {
  std::string out;
  const auto& c = report.core;
  for (std::size_t k = 0; k < c.alpha.size(); ++k) {
    const double delta = k < c.delta.size() ? c.delta[k] : 0.0;
    for (const std::string& cell :
         {report.instance_id, std::to_string(k + 1), format_double(c.eta[k]), format_double(c.eps[k]),
          format_double(delta), format_double(c.lip_v[k]), format_double(c.alpha[k]),
          format_double(c.bound[k]), format_double(report.gap[k]), format_double(report.slack[k])}) {
      if (!out.empty() && out.back() != '\n') out += ',';
      out += cell;
    }
    out += '\n';
  }
  return out;
}

json to_json(const BoundReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"t", v.step + 1}, {"history", v.history.describe()}, {"gap", v.gap}, {"bound", v.bound}});
  }
  json notes = json::object();
  for (const auto& [k, v] : r.notes) notes[k] = v;
  return {{"instance_id", r.instance_id},
          {"estimator", r.estimator},
          {"moduli", to_string(r.moduli)},
          {"eta_scope", "max over positive-probability histories"},
          {"tree_nodes", r.tree_nodes},
          {"eta", r.core.eta},
          {"eps", r.core.eps},
          {"delta", r.core.delta},
          {"lipV", r.core.lip_v},
          {"alpha", r.core.alpha},
          {"bound", r.core.bound},
          {"gap", r.gap},
          {"slack", r.slack},
          {"root_gaps", r.root_gaps},
          {"violations", violations},
          {"notes", notes},
          {"passed", r.passed()}};
}

BoundReport report_from_json(const json& j) {
  auto field = [&](const char* key) -> const json& {
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("report field '") + key + "': missing");
    return j.at(key);
  };
  auto vec = [&](const char* key) {
    try {
      return field(key).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("report field '") + key + "': " + e.what());
    }
  };
  BoundReport r;
  try {
    r.instance_id = field("instance_id").get<std::string>();
    r.estimator = j.value("estimator", "");
    r.moduli = parse_moduli_kind(j.value("moduli", "linear"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  r.core.eta = vec("eta");
  r.core.eps = vec("eps");
  r.core.delta = vec("delta");
  r.core.lip_v = vec("lipV");
  r.core.alpha = vec("alpha");
  r.core.bound = vec("bound");
  r.gap = vec("gap");
  r.slack = vec("slack");
  const std::size_t T = r.core.alpha.size();
  if (r.core.eta.size() != T || r.core.eps.size() != T || r.core.lip_v.size() != T ||
      r.core.bound.size() != T || r.core.delta.size() + 1 != T) {
    throw ParseError("report: per-epoch arrays disagree on the horizon");
  }
  return r;
}

std::string explain(const BoundReport& report, std::size_t t) {
  const std::size_t T = report.core.alpha.size();
  if (t < 1 || t > T) {
    throw StructuralError("epoch " + std::to_string(t) + " out of range 1.." + std::to_string(T));
  }
  const auto terms = alpha_decomposition(report.core, t - 1);
  std::size_t dominant = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    total += terms[i].value;
    if (terms[i].value > terms[dominant].value) dominant = i;
  }
  std::ostringstream os;
  os << report.instance_id << "  t=" << t << "  alpha=" << format_double(report.core.alpha[t - 1])
     << "  bound=" << format_double(report.core.bound[t - 1]) << '\n';
  for (std::size_t i = 0; i < terms.size(); ++i) {
    os << "  " << (i == dominant ? '*' : ' ') << ' ' << terms[i].label << " = "
       << format_double(terms[i].value) << '\n';
  }
  os << "  sum of terms = " << format_double(total);
  const double err = std::abs(total - report.core.alpha[t - 1]);
  os << (err <= 1e-9 ? "  (matches alpha)" : "  (MISMATCH " + format_double(err) + ")") << '\n';
  if (t <= report.gap.size()) {
    os << "  worst gap = " << format_double(report.gap[t - 1])
       << "  slack = " << format_double(report.slack[t - 1]) << '\n';
  }
  return os.str();
}

}  // namespace cebound
