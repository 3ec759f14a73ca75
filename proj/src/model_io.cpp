#include "cebound/model_io.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "cebound/errors.hpp"

namespace cebound {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ParseError("model field '" + field + "': " + what);
}

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + key, "missing");
  return j.at(key);
}

template <class T>
T as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    bad(field, e.what());
  }
}

std::vector<double> flat(const json& j, const std::string& field, std::vector<std::size_t> shape) {
  std::vector<double> out;
  std::function<void(const json&, std::size_t, const std::string&)> walk =
      [&](const json& node, std::size_t depth, const std::string& path) {
        if (depth == shape.size()) {
          if (!node.is_number()) bad(path, "expected a number");
          out.push_back(node.get<double>());
          return;
        }
        if (!node.is_array() || node.size() != shape[depth]) {
          bad(path, "expected an array of length " + std::to_string(shape[depth]));
        }
        for (std::size_t i = 0; i < node.size(); ++i) {
          walk(node[i], depth + 1, path + "[" + std::to_string(i) + "]");
        }
      };
  walk(j, 0, field);
  return out;
}

template <class F>
auto wrap_errors(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    bad(field, e.what());
  }
}

}  // namespace

json to_json(const MetricSpace& space) {
  return {{"labels", space.labels()}, {"distance", space.matrix().to_rows()}};
}

json to_json(const Pomdp& p) {
  const std::size_t ns = p.num_states(), ny = p.num_observations(), na = p.num_actions();
  const std::size_t T = p.horizon();
  json initial = json::array();
  for (std::size_t s = 0; s < ns; ++s) {
    json row = json::array();
    for (std::size_t y = 0; y < ny; ++y) row.push_back(p.initial()[s * ny + y]);
    initial.push_back(row);
  }
  json kernel = json::array();
  for (std::size_t k = 0; k + 1 < T; ++k) {
    json ks = json::array();
    for (std::size_t s = 0; s < ns; ++s) {
      json as_ = json::array();
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = p.transitions().row(k, s, a);
        json targets = json::array();
        for (std::size_t s2 = 0; s2 < ns; ++s2) {
          targets.push_back(std::vector<double>(row.begin() + s2 * ny, row.begin() + (s2 + 1) * ny));
        }
        as_.push_back(targets);
      }
      ks.push_back(as_);
    }
    kernel.push_back(ks);
  }
  json costs = json::array();
  for (std::size_t k = 0; k < T; ++k) {
    json ks = json::array();
    for (std::size_t s = 0; s < ns; ++s) {
      json row = json::array();
      for (std::size_t a = 0; a < na; ++a) row.push_back(p.costs()(k, s, a));
      ks.push_back(row);
    }
    costs.push_back(ks);
  }
  return {{"horizon", T},
          {"states", to_json(p.states())},
          {"observations", p.observation_labels()},
          {"actions", p.action_labels()},
          {"initial", initial},
          {"transitions", kernel},
          {"costs", costs}};
}

json to_json(const Abstraction& ab) {
  auto tables = [](const std::vector<Dist>& ds) {
    json out = json::array();
    for (const auto& d : ds) out.push_back(std::vector<double>(d.mass().begin(), d.mass().end()));
    return out;
  };
  return {{"target", to_json(ab.target())},
          {"phi", ab.phi()},
          {"lambda_p", tables(ab.lambda_p())},
          {"lambda_c", tables(ab.lambda_c())}};
}

json to_json(const Estimator& g, const Abstraction& ab) {
  if (g.observation_map()) {
    return {{"kind", "last-observation"}, {"name", g.name()}, {"map", *g.observation_map()}};
  }
  if (g.recursive_form()) {
    return {{"kind", "recursive"},
            {"name", g.name()},
            {"init", g.recursive_form()->init},
            {"update", g.recursive_form()->update}};
  }
  if (g.table_form()) {
    json entries = json::array();
    for (const auto& [h, z] : *g.table_form()) {
      entries.push_back({{"observations", h.observations}, {"actions", h.actions}, {"estimate", z}});
    }
    return {{"kind", "table"}, {"name", g.name()}, {"entries", entries}};
  }
  if (g.hash_seed()) {
    return {{"kind", "hashed"}, {"seed", *g.hash_seed()}, {"targets", ab.target_size()}};
  }
  if (g.name() == "map-posterior" || g.name() == "posterior-mean-representative") {
    return {{"kind", g.name()}};
  }
  throw StructuralError("estimator '" + g.name() + "' has no serializable form");
}

json to_json(const Instance& instance) {
  json notes = json::object();
  for (const auto& [k, v] : instance.notes) notes[k] = v;
  json out = {{"format", kModelFormat},
              {"id", instance.id},
              {"family", to_string(instance.family)},
              {"pomdp", to_json(instance.pomdp)},
              {"abstraction", to_json(instance.abstraction)},
              {"estimator", to_json(instance.estimator, instance.abstraction)},
              {"notes", notes}};
  if (instance.closed_form) {
    auto moduli = [](const std::vector<Modulus>& ms) {
      json out = json::array();
      for (const auto& m : ms) out.push_back({{"breakpoints", m.breakpoints()}, {"tail_slope", m.tail_slope()}});
      return out;
    };
    out["closed_form"] = {{"cost", moduli(instance.closed_form->cost)},
                          {"dynamics", moduli(instance.closed_form->dynamics)}};
  }
  return out;
}

MetricSpace metric_from_json(const json& j) {
  const auto labels = as<std::vector<std::string>>(need(j, "labels", "metric."), "metric.labels");
  const auto& dist = need(j, "distance", "metric.");
  const auto flatd = flat(dist, "metric.distance", {labels.size(), labels.size()});
  return wrap_errors("metric.distance", [&] {
    std::vector<std::vector<double>> rows(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      rows[i].assign(flatd.begin() + i * labels.size(), flatd.begin() + (i + 1) * labels.size());
    }
    return MetricSpace(labels, Matrix::from_rows(rows));
  });
}

Pomdp pomdp_from_json(const json& j) {
  const auto T = as<std::size_t>(need(j, "horizon", "pomdp."), "pomdp.horizon");
  if (T == 0) bad("pomdp.horizon", "must be positive");
  const MetricSpace states = metric_from_json(need(j, "states", "pomdp."));
  const auto obs = as<std::vector<std::string>>(need(j, "observations", "pomdp."), "pomdp.observations");
  const auto acts = as<std::vector<std::string>>(need(j, "actions", "pomdp."), "pomdp.actions");
  const std::size_t ns = states.size(), ny = obs.size(), na = acts.size();
  auto initial = flat(need(j, "initial", "pomdp."), "pomdp.initial", {ns, ny});
  auto kernel = flat(need(j, "transitions", "pomdp."), "pomdp.transitions", {T - 1, ns, na, ns, ny});
  auto costs = flat(need(j, "costs", "pomdp."), "pomdp.costs", {T, ns, na});
  return wrap_errors("pomdp", [&] {
    return Pomdp(states, obs, acts, Dist(initial, 1e-9),
                 Kernel(T - 1, ns, na, ns * ny, kernel, 1e-9), CostTable(T, ns, na, costs), T);
  });
}

Abstraction abstraction_from_json(const json& j, const MetricSpace& source) {
  const auto phi = as<std::vector<std::size_t>>(need(j, "phi", "abstraction."), "abstraction.phi");
  if (phi.size() != source.size()) bad("abstraction.phi", "must have one entry per state");
  return wrap_errors("abstraction", [&] {
    if (j.contains("representatives")) {
      const auto reps = as<std::vector<std::size_t>>(j.at("representatives"), "abstraction.representatives");
      return Abstraction::quantization(source, phi, reps);
    }
    const MetricSpace target = metric_from_json(need(j, "target", "abstraction."));
    auto tables = [&](const char* key) {
      const auto rows = flat(need(j, key, "abstraction."), std::string("abstraction.") + key,
                             {target.size(), source.size()});
      std::vector<Dist> out;
      for (std::size_t c = 0; c < target.size(); ++c) {
        out.emplace_back(std::vector<double>(rows.begin() + c * source.size(),
                                             rows.begin() + (c + 1) * source.size()),
                         1e-9);
      }
      return out;
    };
    return Abstraction(source.size(), target, phi, tables("lambda_p"), tables("lambda_c"));
  });
}

Estimator estimator_from_json(const json& j, const Abstraction& ab) {
  const auto kind = as<std::string>(need(j, "kind", "estimator."), "estimator.kind");
  const std::string name = j.contains("name") ? as<std::string>(j.at("name"), "estimator.name") : kind;
  if (kind == "last-observation") {
    return Estimator::last_observation(
        as<std::vector<std::size_t>>(need(j, "map", "estimator."), "estimator.map"), name);
  }
  if (kind == "quantized-last-observation") return Estimator::quantized_last_observation(ab);
  if (kind == "map-posterior") return Estimator::map_posterior(ab);
  if (kind == "posterior-mean-representative") return Estimator::posterior_mean_representative(ab);
  if (kind == "recursive") {
    RecursiveRule rule;
    rule.init = as<std::vector<std::size_t>>(need(j, "init", "estimator."), "estimator.init");
    rule.update = as<std::vector<std::vector<std::vector<std::size_t>>>>(need(j, "update", "estimator."),
                                                                        "estimator.update");
    return Estimator::recursive(rule, name);
  }
  if (kind == "table") {
    std::map<History, std::size_t> entries;
    for (const auto& e : need(j, "entries", "estimator.")) {
      History h{as<std::vector<std::size_t>>(need(e, "observations", "estimator.entries."), "observations"),
                as<std::vector<std::size_t>>(need(e, "actions", "estimator.entries."), "actions")};
      entries[h] = as<std::size_t>(need(e, "estimate", "estimator.entries."), "estimate");
    }
    return Estimator::table(entries);
  }
  if (kind == "hashed") {
    return Estimator::hashed(as<std::uint64_t>(need(j, "seed", "estimator."), "estimator.seed"),
                             ab.target_size());
  }
  bad("estimator.kind", "unknown estimator kind '" + kind + "'");
}

Instance instance_from_json(const json& j) {
  if (!j.is_object()) bad("<root>", "expected an object");
  if (j.contains("format") && j.at("format") != kModelFormat) {
    bad("format", "unsupported format " + j.at("format").dump());
  }
  Instance out;
  out.id = j.contains("id") ? as<std::string>(j.at("id"), "id") : "model";
  out.family = Family::kRandom;
  if (j.contains("family")) {
    out.family = wrap_errors("family", [&] { return parse_family(as<std::string>(j.at("family"), "family")); });
  }
  out.pomdp = pomdp_from_json(need(j, "pomdp", ""));
  out.abstraction = j.contains("abstraction")
                        ? abstraction_from_json(j.at("abstraction"), out.pomdp.states())
                        : Abstraction::identity(out.pomdp.states());
  out.estimator = j.contains("estimator") ? estimator_from_json(j.at("estimator"), out.abstraction)
                                          : Estimator::map_posterior(out.abstraction);
  if (j.contains("notes")) out.notes = as<std::map<std::string, double>>(j.at("notes"), "notes");
  if (j.contains("closed_form")) {
    auto moduli = [&](const char* key) {
      std::vector<Modulus> out;
      for (const auto& m : need(j.at("closed_form"), key, "closed_form.")) {
        out.push_back(wrap_errors(std::string("closed_form.") + key, [&] {
          return Modulus(as<std::vector<Modulus::Point>>(need(m, "breakpoints", "closed_form."), "breakpoints"),
                         as<double>(need(m, "tail_slope", "closed_form."), "tail_slope"));
        }));
      }
      return out;
    };
    out.closed_form = ModuliSet{moduli("cost"), moduli("dynamics")};
  }
  return out;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("model file '" + path.string() + "': " + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << to_json(instance).dump(1) << '\n';
}

json tree_to_json(const HistoryTree& tree, const Pomdp& p) {
  json nodes = json::array();
  for (NodeId id = 0; id < tree.size(); ++id) {
    const HistoryNode& n = tree.node(id);
    const auto b = tree.belief(id);
    json belief = json::object();
    for (std::size_t s = 0; s < b.size(); ++s) {
      if (b[s] > 0.0) belief[p.states().label(s)] = b[s];
    }
    json node = {{"id", id},
                 {"step", n.step},
                 {"history", tree.history(id).describe()},
                 {"observation", p.observation_labels()[n.observation]},
                 {"likelihood", n.likelihood},
                 {"belief", belief}};
    if (n.parent != kNoNode) {
      node["parent"] = n.parent;
      node["action"] = p.action_labels()[n.action];
      node["cond_prob"] = n.cond_prob;
    }
    nodes.push_back(node);
  }
  return {{"nodes", nodes}};
}

}  // namespace cebound
