#include "cebound/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "cebound/errors.hpp"
#include "cebound/model_io.hpp"
#include "cebound/report.hpp"

namespace cebound {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw ParseError("config field '" + field + "': " + what);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

std::string sanitize(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' || c == '=';
    if (!ok) c = '_';
  }
  return out.empty() ? "scenario" : out;
}

std::string value_text(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::vector<Job> expand(const json& entry, const std::string& where, std::size_t index,
                        const std::filesystem::path& base_dir, std::uint64_t base_seed) {
  if (!entry.is_object()) config_error(where, "must be an object");
  const std::string given_id = entry.contains("id") ? entry.at("id").get<std::string>() : "";
  if (entry.contains("model")) {
    if (!entry.at("model").is_string()) config_error(where + ".model", "must be a path string");
    Job job;
    std::filesystem::path path = entry.at("model").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    job.model = path;
    job.id = given_id.empty() ? "model-" + std::to_string(index) : given_id;
    return {job};
  }
  if (!entry.contains("family") || !entry.at("family").is_string()) {
    config_error(where + ".family", "missing (or give a model path)");
  }
  ScenarioSpec base;
  try {
    base.family = parse_family(entry.at("family").get<std::string>());
  } catch (const SpecError& e) {
    config_error(where + ".family", e.what());
  }
  if (entry.contains("params")) {
    if (!entry.at("params").is_object()) config_error(where + ".params", "must be an object");
    base.params = entry.at("params");
  }
  const std::string stem = given_id.empty() ? std::string(to_string(base.family)) + "-" + std::to_string(index)
                                            : given_id;
  for (const auto& item : entry.items()) {
    static const char* known[] = {"family", "id", "params", "sweep", "seeds", "seed_range", "model"};
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      config_error(where + "." + item.key(), "unknown key");
    }
  }

  std::vector<Job> jobs;
  // seed expansion
  std::vector<std::uint64_t> seeds;
  if (entry.contains("seeds")) {
    if (!entry.at("seeds").is_array()) config_error(where + ".seeds", "must be an array");
    for (const auto& s : entry.at("seeds")) {
      if (!s.is_number_unsigned() && !s.is_number_integer()) config_error(where + ".seeds", "entries must be integers");
      seeds.push_back(s.get<std::uint64_t>());
    }
  } else if (entry.contains("seed_range")) {
    const auto& r = entry.at("seed_range");
    if (!r.is_array() || r.size() != 2) config_error(where + ".seed_range", "must be [first, last)");
    for (auto s = r[0].get<std::uint64_t>(); s < r[1].get<std::uint64_t>(); ++s) seeds.push_back(s);
  }
  if (!seeds.empty()) {
    for (std::uint64_t s : seeds) {
      Job job;
      job.spec = base;
      job.spec->params["seed"] = s + base_seed;
      job.id = job.spec->id = stem + "-seed" + std::to_string(s + base_seed);
      jobs.push_back(std::move(job));
    }
    return jobs;
  }
  if (entry.contains("sweep")) {
    const auto& sw = entry.at("sweep");
    if (!sw.is_object() || !sw.contains("param") || !sw.contains("values") || !sw.at("values").is_array() ||
        !sw.at("param").is_string()) {
      config_error(where + ".sweep", "must be {\"param\": name, \"values\": [...]}");
    }
    const std::string param = sw.at("param").get<std::string>();
    for (const auto& v : sw.at("values")) {
      Job job;
      job.spec = base;
      job.spec->params[param] = v;
      job.id = job.spec->id = stem + "-" + param + "=" + value_text(v);
      job.sweep_group = stem;
      if (v.is_number()) job.sweep_value = v.get<double>();
      jobs.push_back(std::move(job));
    }
    return jobs;
  }
  Job job;
  job.spec = base;
  if (base.family == Family::kRandom && base_seed != 0) {
    job.spec->params["seed"] = job.spec->params.value("seed", std::uint64_t{0}) + base_seed;
  }
  job.id = job.spec->id = stem;
  jobs.push_back(std::move(job));
  return jobs;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << content;
}

BoundReport bound_only_report(const std::string& id, const BoundOnlyResult& r, ModuliKind kind) {
  BoundReport rep;
  rep.instance_id = id;
  rep.estimator = "weighted-mean-observation";
  rep.moduli = kind;
  rep.core = r.core;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.gap.assign(r.core.alpha.size(), nan);
  rep.slack.assign(r.core.alpha.size(), nan);
  rep.notes = r.notes;
  rep.notes["mc_value"] = r.mc_value;
  rep.notes["mc_stderr"] = r.mc_stderr;
  rep.notes["mc_samples"] = double(r.samples);
  return rep;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPassed: return "passed";
    case Verdict::kBoundOnly: return "bound-only";
    case Verdict::kViolation: return "bound-violation";
    case Verdict::kInvariantFailure: return "invariant-failure";
    case Verdict::kError: return "error";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const RunOverrides& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("config syntax error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!j.is_object()) config_error("<root>", "must be an object");
  for (const auto& item : j.items()) {
    static const char* known[] = {"scenarios", "moduli", "tolerance", "budget", "reach_tol",
                                  "recursive_lipschitz", "output", "seed", "workers"};
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      config_error(item.key(), "unknown key");
    }
  }
  RunConfig c;
  try {
    if (j.contains("moduli")) c.moduli = parse_moduli_kind(j.at("moduli").get<std::string>());
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("budget")) c.budget = j.at("budget").get<std::size_t>();
    if (j.contains("reach_tol")) c.reach_tol = j.at("reach_tol").get<double>();
    if (j.contains("recursive_lipschitz")) c.recursive_lipschitz = j.at("recursive_lipschitz").get<bool>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
  } catch (const json::exception& e) {
    config_error("<root>", e.what());
  }
  if (const char* env = std::getenv("CETOOL_BUDGET")) {
    char* end = nullptr;
    const unsigned long long b = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || b == 0) throw ParseError("CETOOL_BUDGET must be a positive integer");
    c.budget = static_cast<std::size_t>(b);
  }
  if (overrides.moduli) c.moduli = *overrides.moduli;
  if (overrides.budget) c.budget = *overrides.budget;
  if (overrides.output) c.output = *overrides.output;
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.workers) c.workers = *overrides.workers;
  if (c.budget == 0) config_error("budget", "must be positive");
  if (!(c.tolerance >= 0.0)) config_error("tolerance", "must be non-negative");
  if (c.workers == 0) c.workers = 1;

  if (!j.contains("scenarios") || !j.at("scenarios").is_array()) config_error("scenarios", "missing list");
  const auto& list = j.at("scenarios");
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      for (auto& job : expand(list[i], "scenarios[" + std::to_string(i) + "]", i, base_dir, c.seed)) {
        if (overrides.families && job.spec &&
            std::find(overrides.families->begin(), overrides.families->end(), to_string(job.spec->family)) ==
                overrides.families->end()) {
          continue;
        }
        c.jobs.push_back(std::move(job));
      }
    } catch (const json::exception& e) {
      config_error("scenarios[" + std::to_string(i) + "]", e.what());
    }
  }
  if (list.empty()) config_error("scenarios", "must not be empty");
  std::map<std::string, int> seen;
  for (const auto& job : c.jobs) {
    if (seen[job.id]++) config_error("scenarios", "duplicate scenario id '" + job.id + "'");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), overrides);
}

JobResult run_job(const Job& job, const RunConfig& config) {
  JobResult out;
  out.id = job.id;
  out.family = job.spec ? to_string(job.spec->family) : "model";
  try {
    if (job.spec && is_bound_only(*job.spec)) {
      out.report = bound_only_report(job.id, mean_field_bound_only(*job.spec), config.moduli);
      out.verdict = Verdict::kBoundOnly;
      out.message = "bound-only mode: no exact oracle for this particle count";
      return out;
    }
    const Instance inst = job.model ? load_instance(*job.model) : generate(*job.spec);
    if (job.model) out.family = to_string(inst.family);
    VerifyOptions opt;
    opt.moduli = config.moduli;
    opt.tree.budget = config.budget;
    opt.tree.reach_tol = config.reach_tol;
    opt.recursive_lipschitz = config.recursive_lipschitz;
    opt.tol = config.tolerance;
    const Analysis a = analyze(inst.pomdp, inst.abstraction, inst.estimator, opt);
    BoundReport rep = report_from(a, inst.estimator.name(), opt);
    rep.instance_id = job.id;
    rep.notes = inst.notes;
    const AisResiduals ais = ais_residuals(inst.pomdp, inst.abstraction, a);
    rep.notes["ap1_worst_excess"] = ais.worst_ap1_excess;
    rep.notes["ap2_worst_excess"] = ais.worst_ap2_excess;
    if (inst.notes.count("eta_ceiling")) {
      rep.notes["eta_ceiling_excess"] =
          *std::max_element(rep.core.eta.begin(), rep.core.eta.end()) - inst.notes.at("eta_ceiling");
    }
    if (inst.closed_form) {
      const BoundCore cf = theorem_bound(rep.core.eta, *inst.closed_form, rep.core.lip_v);
      rep.notes["closed_form_bound_t1"] = cf.bound[0];
    }
    out.report = std::move(rep);
    if (!out.report->passed()) {
      const auto& v = out.report->violations.front();
      out.verdict = Verdict::kViolation;
      out.message = "gap " + format_double(v.gap) + " exceeds bound " + format_double(v.bound) + " at t=" +
                    std::to_string(v.step + 1) + " on history " + v.history.describe();
    } else if (ais.worst_ap1_excess > config.tolerance || ais.worst_ap2_excess > config.tolerance) {
      out.verdict = Verdict::kInvariantFailure;
      out.message = "AIS residual above its ceiling";
    } else {
      out.verdict = Verdict::kPassed;
    }
  } catch (const SizingError& e) {
    out.verdict = Verdict::kError;
    out.message = "scenario '" + job.id + "': " + e.what();
  } catch (const InvariantViolation& e) {
    out.verdict = Verdict::kInvariantFailure;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.verdict = Verdict::kError;
    out.message = e.what();
  }
  return out;
}

RunSummary run(const RunConfig& config, std::ostream& log) {
  RunSummary summary;
  summary.results.resize(config.jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < config.jobs.size();) {
      summary.results[i] = run_job(config.jobs[i], config);
    }
  };
  const std::size_t nthreads = std::min(config.workers, std::max<std::size_t>(1, config.jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  namespace fs = std::filesystem;
  const fs::path dir = config.output;
  fs::create_directories(dir / "scenarios");
  std::string all_rows = std::string(kCsvHeader) + "\n";
  json verdicts = json::array();
  struct FamilyStats {
    std::size_t count = 0, passed = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
    double min_ratio = std::numeric_limits<double>::infinity();
  };
  std::map<std::string, FamilyStats> families;
  std::map<std::string, std::vector<std::pair<double, const BoundReport*>>> plots;
  bool ok = true;

  for (std::size_t i = 0; i < config.jobs.size(); ++i) {
    const Job& job = config.jobs[i];
    const JobResult& r = summary.results[i];
    const std::string stem = sanitize(job.id);
    const bool pass = r.verdict == Verdict::kPassed || r.verdict == Verdict::kBoundOnly;
    ok = ok && pass;
    auto& fam = families[r.family];
    ++fam.count;
    if (pass) ++fam.passed;
    if (r.report) {
      const std::string rows = csv_rows(*r.report);
      all_rows += rows;
      write_file(dir / "scenarios" / (stem + ".csv"), std::string(kCsvHeader) + "\n" + rows);
      write_file(dir / "scenarios" / (stem + ".report.json"), to_json(*r.report).dump(2) + "\n");
      if (r.verdict != Verdict::kBoundOnly) {
        fam.worst_slack = std::min(fam.worst_slack, r.report->worst_slack());
        for (std::size_t k = 0; k < r.report->gap.size(); ++k) {
          if (r.report->gap[k] > 1e-12) fam.min_ratio = std::min(fam.min_ratio, r.report->core.bound[k] / r.report->gap[k]);
        }
      }
      if (job.sweep_value) plots[job.sweep_group].emplace_back(*job.sweep_value, &*r.report);
    }
    if (job.spec && r.verdict != Verdict::kBoundOnly) {
      try {
        save_instance(generate(*job.spec), dir / "scenarios" / (stem + ".instance.json"));
      } catch (const std::exception&) {
        // the failure is already recorded in the verdict
      }
    }
    verdicts.push_back({{"id", job.id}, {"family", r.family}, {"verdict", to_string(r.verdict)}, {"message", r.message}});
    log << to_string(r.verdict) << "  " << job.id;
    if (!r.message.empty()) log << "  " << r.message;
    log << '\n';
  }
  write_file(dir / "bounds.csv", all_rows);

  std::string table = "family,scenarios,passed,worst_slack,min_bound_over_gap\n";
  for (const auto& [name, s] : families) {
    table += name + "," + std::to_string(s.count) + "," + std::to_string(s.passed) + "," +
             format_double(s.worst_slack) + "," + format_double(s.min_ratio) + "\n";
  }
  write_file(dir / "summary.csv", table);
  summary.exit_code = ok ? 0 : 1;
  write_file(dir / "verdict.json",
             json{{"passed", ok}, {"exit_code", summary.exit_code}, {"scenarios", verdicts}}.dump(2) + "\n");

  for (const auto& [group, points] : plots) {
    std::string dat = "# x bound_t1 gap_t1\n";
    for (const auto& [x, rep] : points) {
      dat += format_double(x) + " " + format_double(rep->core.bound[0]) + " " + format_double(rep->gap[0]) + "\n";
    }
    write_file(dir / ("plot_" + sanitize(group) + ".dat"), dat);
  }
  log << (ok ? "PASS" : "FAIL") << "  " << config.jobs.size() << " scenario(s), output in " << dir.string() << '\n';
  return summary;
}

}  // namespace cebound
