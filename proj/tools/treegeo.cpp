// treegeo: command-line driver for the tree geocoding pipeline.
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "treegeo/config.hpp"
#include "treegeo/pipeline.hpp"

namespace {

using Stage = std::function<std::string(const treegeo::RunConfig&)>;

void timed(const Stage& stage, const treegeo::RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string summary = stage(config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << fmt::format("{} time={:.3f}s\n", summary, secs) << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geocode street trees from an address inventory and panorama detections"};
  app.require_subcommand(1);

  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "key = value config file");
  app.add_flag("--print-config", print_config, "print the effective configuration before running");
  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& key : treegeo::config_keys()) {
    overrides[key.name];
    app.add_option("--" + key.name, overrides[key.name], key.help);
  }

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ingest", "normalize the inventory into inventory.tsv"},
      {"geocode", "geocode addresses (through the cache) and flag outliers"},
      {"project", "project detections onto the ground"},
      {"fuse", "fuse projected detections into trees"},
      {"assign", "assign trees to addresses"},
      {"evaluate", "categorize every inventory tree"},
      {"synth", "write a synthetic municipality"},
      {"run-all", "ingest, geocode, project, fuse, assign, evaluate"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    treegeo::RunConfig config = config_path.empty() ? treegeo::RunConfig{} : treegeo::load_config(config_path);
    for (const auto& [name, value] : overrides) {
      if (value) treegeo::set_config_value(config, name, *value);
    }
    if (print_config) std::cout << treegeo::dump_config(config);

    const std::map<std::string, Stage> stages{
        {"ingest", [](const auto& c) { return treegeo::run_ingest(c); }},
        {"geocode", [](const auto& c) { return treegeo::run_geocode(c); }},
        {"project", [](const auto& c) { return treegeo::run_project(c); }},
        {"fuse", [](const auto& c) { return treegeo::run_fuse(c); }},
        {"assign", [](const auto& c) { return treegeo::run_assign(c); }},
        {"evaluate", [](const auto& c) { return treegeo::run_evaluate(c); }},
        {"synth", [](const auto& c) { return treegeo::run_synth(c); }},
    };
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "run-all") {
      for (const char* name : {"ingest", "geocode", "project", "fuse", "assign", "evaluate"}) {
        timed(stages.at(name), config);
      }
    } else {
      timed(stages.at(command), config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
