// SPDX-License-Identifier: Apache-2.0
//
// cvqkd: batch front-end for rate evaluations, sweeps and simulator runs.
// Exit status: 0 when every point succeeded, 2 when some points failed,
// 1 on configuration, usage or I/O errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cvqkd/cvqkd.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string format;
  std::string clamp;
  std::string at;
  std::string dump;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output path (default: stdout)");
  cmd->add_option("--format", o.format, "Output format (default: [output] format)")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "Root seed (default: [scenario] seed)");
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--clamp", o.clamp, "Clamp composable rates at zero (default: [output] clamp)")
      ->check(CLI::IsMember({"on", "off"}));
}

int run(const std::string& command, const Options& o) {
  using namespace cvqkd;
  const auto sc = load_scenario(o.config);
  const std::uint64_t seed = o.seed.value_or(sc.seed);
  const int jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const bool clamp = o.clamp.empty() ? sc.output.clamp : o.clamp == "on";
  const std::string format = o.format.empty() ? sc.output.format : o.format;

  ResultTable table;
  if (command == "rate") {
    const double at = config::parse_quantity(o.at, config::sweep_dim(sc.link.family));
    table = run_rate(sc, at, jobs, clamp, seed);
  } else if (command == "sweep") {
    table = run_sweep(sc, jobs, clamp, seed);
  } else if (command == "simulate") {
    auto sim = run_simulation(sc, seed, jobs);
    if (!o.dump.empty()) {
      std::ofstream d(o.dump, std::ios::binary | std::ios::trunc);
      if (!d) throw std::runtime_error(o.dump + ": cannot open for writing");
      write_block_csv(d, sim.block);
      if (!d) throw std::runtime_error(o.dump + ": write failed");
    }
    table = std::move(sim.table);
  } else {
    table = run_coverage(sc, seed, jobs);
  }
  emit_results(table, sc, format, o.out, std::cout);
  const auto failed = failed_rows(table);
  if (failed > 0) {
    std::cerr << "cvqkd: " << failed << " of " << table.rows.size() << " points failed\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composable finite-size key rates for Gaussian-modulated coherent-state CV-QKD"};
  app.set_version_flag("--version", std::string(cvqkd::library_version));
  app.require_subcommand(1);
  Options o;
  auto* rate = app.add_subcommand("rate", "Evaluate every curve at one abscissa");
  add_common(rate, o);
  rate->add_option("--at", o.at, "Abscissa: loss (dB) or distance, with optional unit")->required();
  add_common(app.add_subcommand("sweep", "Evaluate the [sweep] grid"), o);
  auto* sim = app.add_subcommand("simulate", "Run the [simulate] experiment");
  add_common(sim, o);
  sim->add_option("--dump", o.dump, "Also write the simulated block as CSV");
  add_common(app.add_subcommand("coverage", "Run the [coverage] estimator experiment"), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const cvqkd::ConfigError& e) {
    std::cerr << "cvqkd: config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "cvqkd: error: " << e.what() << '\n';
  }
  return 1;
}
