#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cebound/errors.hpp"
#include "cebound/model_io.hpp"
#include "cebound/report.hpp"
#include "cebound/runner.hpp"

namespace {

std::vector<std::string> split(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int explain_main(const std::string& path, std::size_t t) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open report '" << path << "'\n";
    return 2;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << path << ": " << e.what() << '\n';
    return 2;
  }
  const cebound::BoundReport report = cebound::report_from_json(j);
  std::cout << cebound::explain(report, t);
  return 0;
}

int tree_main(const std::string& path, std::size_t budget) {
  const cebound::Instance inst = cebound::load_instance(path);
  cebound::TreeOptions opt;
  if (budget > 0) opt.budget = budget;
  const auto tree = cebound::HistoryTree::build(inst.pomdp, opt);
  std::cout << cebound::tree_to_json(tree, inst.pomdp).dump(1) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certainty-equivalence bound verification"};
  app.require_subcommand(0, 1);

  std::string config;
  std::string moduli;
  std::size_t budget = 0;
  std::string out;
  std::uint64_t seed = 0;
  std::string families;
  std::size_t workers = 0;
  app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--moduli", moduli, "Modulus fit")->check(CLI::IsMember({"linear", "envelope"}));
  app.add_option("--budget", budget, "Oracle node budget per scenario")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Base seed for random families");
  app.add_option("--families", families, "Comma-separated family filter");
  app.add_option("--workers", workers, "Concurrent scenarios")->check(CLI::PositiveNumber);

  auto* explain = app.add_subcommand("explain", "Decompose alpha_t of a saved report");
  std::string report_path;
  std::size_t t = 1;
  explain->add_option("report", report_path, "report.json written by a run")->required();
  explain->add_option("t", t, "Epoch, 1-based")->required();

  auto* tree = app.add_subcommand("tree", "Print the reachable history tree of a model file as JSON")->fallthrough();
  std::string model_path;
  tree->add_option("model", model_path, "instance JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*explain) return explain_main(report_path, t);
    if (*tree) return tree_main(model_path, budget);
    if (config.empty()) {
      std::cerr << "error: --config is required\n" << app.help();
      return 2;
    }
    cebound::RunOverrides ov;
    if (!moduli.empty()) ov.moduli = cebound::parse_moduli_kind(moduli);
    if (app.count("--budget")) ov.budget = budget;
    if (!out.empty()) ov.output = out;
    if (app.count("--seed")) ov.seed = seed;
    if (!families.empty()) {
      const auto list = split(families);
      for (const auto& f : list) cebound::parse_family(f);
      ov.families = list;
    }
    if (app.count("--workers")) ov.workers = workers;
    const cebound::RunConfig cfg = cebound::load_config(config, ov);
    return cebound::run(cfg, std::cout).exit_code;
  } catch (const cebound::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const cebound::SpecError& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
