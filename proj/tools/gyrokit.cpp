#include "gyrokit/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using namespace gyrokit;
  CLI::App app{"Run a gyrokit experiment and write its CSV table"};
  std::string experiment;
  std::string config_path;
  std::string out_path;
  bool list = false;
  app.add_option("experiment", experiment, "experiment name (see --list)");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_path, "CSV output path (stdout when omitted)");
  app.add_flag("--list", list, "list registered experiments");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list) {
    for (const auto& e : experiments()) std::cout << fmt::format("{:<20} {}\n", e.name, e.summary);
    return 0;
  }
  if (experiment.empty()) {
    std::cerr << "error: no experiment given (see --list)\n";
    return 2;
  }

  try {
    const Config config = config_path.empty() ? Config{} : Config::load(config_path);
    const ExperimentResult result = run_experiment(experiment, config);
    const std::string csv = result.table.to_csv();
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << fmt::format("error: cannot write '{}'\n", out_path);
        return 2;
      }
      out << csv;
    }
    for (const auto& f : result.failures) std::cerr << fmt::format("FAIL {}: {}\n", experiment, f);
    return result.passed() ? 0 : 1;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
