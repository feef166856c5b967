#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "comp/sim.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw comp::IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw comp::ConfigError("<file>", path + ": " + e.what());
  }
}

std::vector<comp::PolicyKind> parse_policies(const std::string& list) {
  std::vector<comp::PolicyKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) {
      try {
        out.push_back(comp::policy_from_string(item));
      } catch (const std::invalid_argument& e) {
        throw comp::ConfigError("policies", e.what());
      }
    }
  return out;
}

int simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
             const std::string& policies, bool per_ue, const std::string& dump_layout, const std::string& layout_path) {
  comp::SimConfig config = config_path.empty() ? comp::SimConfig{} : comp::SimConfig::from_json(read_json(config_path));
  config.seed = seed;
  if (!policies.empty()) config.policies = parse_policies(policies);
  if (per_ue) config.per_ue_decisions = true;
  config.validate();

  std::optional<comp::Layout> layout;
  if (!layout_path.empty()) {
    try {
      layout = comp::layout_from_json(read_json(layout_path));
    } catch (const nlohmann::json::exception& e) {
      throw comp::ConfigError("layout", e.what());
    } catch (const std::invalid_argument& e) {
      throw comp::ConfigError("layout", e.what());
    }
  }
  if (!dump_layout.empty()) {
    const auto geometry = layout ? *layout
                                 : comp::generate_layout(comp::RngStream(config.seed), config.params, config.n_ue,
                                                         config.n_small_cells);
    std::ofstream out(dump_layout);
    if (!out) throw comp::IoError("cannot open " + dump_layout + " for writing");
    out << comp::layout_to_json(geometry).dump(2) << "\n";
    if (!out) throw comp::IoError("failed writing " + dump_layout);
  }

  const auto start = std::chrono::steady_clock::now();
  const auto report = comp::run(config, layout);
  comp::emit_reports(report, out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "simulate: %zu UEs, %zu TTIs, %zu policies in %.1f s -> %s\n", layout ? layout->ues.size() : config.n_ue,
               config.t_sim, config.policies.size(), secs, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink joint-transmission CoMP trigger simulator"};
  app.require_subcommand(1);
  auto* sim = app.add_subcommand("simulate", "run all policies on shared channel realizations");
  std::string config_path, out_dir, policies, dump_layout, layout_path;
  std::uint64_t seed = 1;
  bool per_ue = false;
  sim->add_option("--config", config_path, "JSON configuration file")->required();
  sim->add_option("--seed", seed, "random seed")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--policies", policies, "comma-separated subset of static,svm,dnn");
  sim->add_flag("--per-ue-decisions", per_ue, "threshold each UE's own prediction");
  sim->add_option("--dump-layout", dump_layout, "write the geometry to a JSON file");
  sim->add_option("--layout", layout_path, "replay geometry from a JSON file");
  CLI11_PARSE(app, argc, argv);

  try {
    return simulate(config_path, seed, out_dir, policies, per_ue, dump_layout, layout_path);
  } catch (const comp::ConfigError& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 2;
  } catch (const comp::IoError& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 1;
  }
}
