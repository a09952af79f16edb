#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gcnet/error.hpp"
#include "gcnet/experiment.hpp"

namespace {

int exit_code(gcnet::ErrorKind kind) {
  switch (kind) {
    case gcnet::ErrorKind::Config:
    case gcnet::ErrorKind::Input:
    case gcnet::ErrorKind::Format:
      return 2;
    case gcnet::ErrorKind::Numeric:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectivity-guided pruning experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a pruning sweep and write results.csv/summary.txt");
  std::string config_path;
  std::string out_dir = "out";
  bool quiet = false;
  // Overrides are applied in this order after the config file.
  std::vector<std::pair<std::string, std::optional<std::string>>> overrides = {
      {"arch", {}},   {"dataset", {}}, {"metric", {}}, {"method", {}}, {"hybrid", {}},
      {"alpha", {}},  {"epochs", {}},  {"trials", {}}, {"seed", {}},
  };
  run->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  for (auto& [key, value] : overrides) run->add_option("--" + key, value);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("-q,--quiet", quiet, "no progress log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every usage error is a config error
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    gcnet::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = gcnet::load_config(config_path);
    for (const auto& [key, value] : overrides)
      if (value) {
        try {
          gcnet::set_config_value(cfg, key, *value);
        } catch (const gcnet::Error& e) {
          throw e.with_phase("--" + key);
        }
      }
    cfg.out = out_dir;
    gcnet::validate(cfg);
    const auto result = gcnet::run_experiment(cfg, quiet ? nullptr : &std::cerr);
    gcnet::write_outputs(cfg, result, out_dir);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "results.csv").string() << "\n";
    return 0;
  } catch (const gcnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
