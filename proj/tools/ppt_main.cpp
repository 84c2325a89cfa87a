// Copyright 2026 The PPT Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ppt: scenario runner.
//
//   ppt run <config> [--seed N] [--output DIR] [--debug-dump-keys]
//   ppt sweep-connectivity [--pools ..] [--rings ..] [--n N] [--trials N]
//   ppt dropout-series <config> [--counts 0,1,5,10,15] [--reps 20]
//   ppt bench [--ops ..] [--dim N] [--iterations N] [--reps N]
//   ppt verify-oracle <config>
//
// Outputs go under $PPT_OUTPUT_ROOT (default ./out).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppt/scenario.hpp"

namespace fs = std::filesystem;
using namespace ppt;

namespace {

fs::path resolve_dir(const std::string& requested, const std::string& fallback) {
  const fs::path p = requested.empty() ? fs::path(fallback) : fs::path(requested);
  return p.is_absolute() ? p : scenario::output_root() / p;
}

std::ofstream open_csv(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

scenario::ScenarioConfig load(const std::string& path,
                              const std::optional<std::uint64_t>& seed) {
  scenario::ScenarioConfig config = scenario::load_config(path);
  if (seed) config.seed = *seed;
  return config;
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::string& output, bool dump_keys) {
  auto config = load(path, seed);
  if (dump_keys) config.dump_keys = true;
  const auto result = scenario::simulate(config);
  const fs::path dir = resolve_dir(output.empty() ? config.output_dir : output, config.name);
  scenario::write_outputs(result, config, dir);
  for (const auto& r : result.rounds) {
    std::cout << "round " << r.round << ": "
              << (r.completed ? "completed" : "aborted (" + r.abort_reason + ")")
              << ", transmissions " << r.transmissions << ", contributors "
              << r.contributors << '\n';
  }
  std::cout << "completed " << result.completed_rounds() << "/" << result.rounds.size()
            << " rounds, average transmissions " << result.average_transmissions()
            << "\nscenario hash " << result.scenario_hash << "\noutputs in "
            << dir.string() << '\n';
  return 0;
}

int cmd_sweep(const scenario::SweepConfig& config, const std::string& output) {
  const auto rows = scenario::run_connectivity_sweep(config);
  scenario::write_sweep_csv(std::cout, rows);
  auto out = open_csv(resolve_dir(output, "sweep") / "connectivity.csv");
  scenario::write_sweep_csv(out, rows);
  return 0;
}

int cmd_dropout(const std::string& path, const std::optional<std::uint64_t>& seed,
                const std::vector<std::size_t>& counts, std::size_t reps,
                const std::string& output) {
  const auto config = load(path, seed);
  const auto rows = scenario::run_dropout_series(config, counts, reps);
  scenario::write_dropout_csv(std::cout, rows);
  auto out = open_csv(resolve_dir(output, config.name) / "dropout_series.csv");
  scenario::write_dropout_csv(out, rows);
  return 0;
}

int cmd_bench(const scenario::BenchConfig& config, const std::string& output) {
  const auto rows = scenario::run_bench(config);
  scenario::write_bench_csv(std::cout, rows);
  std::cout << "# relative costs on this machine only; absolute timings are not "
               "comparable across hardware\n";
  auto out = open_csv(resolve_dir(output, "bench") / "bench.csv");
  scenario::write_bench_csv(out, rows);
  return 0;
}

int cmd_verify(const std::string& path, const std::optional<std::uint64_t>& seed) {
  const auto config = load(path, seed);
  const auto result = scenario::simulate(config);
  for (const auto& r : result.rounds) {
    std::cout << "round " << r.round << ": "
              << (r.completed ? (r.oracle_match ? "match" : "MISMATCH")
                              : "aborted (" + r.abort_reason + ")")
              << '\n';
  }
  const bool ok = result.oracle_mismatches == 0 && result.final_model == result.oracle_model;
  std::cout << (ok ? "oracle: bit-identical over " : "oracle: MISMATCH over ")
            << result.rounds.size() << " rounds\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-to-peer masked aggregation simulator"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::string output;

  auto* run = app.add_subcommand("run", "Run a scenario config");
  std::string run_config;
  run->add_option("config", run_config, "Scenario INI file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--output", output, "Output directory (relative to the output root)");
  bool dump_keys = false;
  run->add_flag("--debug-dump-keys", dump_keys,
                "Write key rings and link keys to keys.txt (test fixtures only)");

  auto* sweep = app.add_subcommand("sweep-connectivity",
                                   "Analytic vs. empirical shared-key probability");
  scenario::SweepConfig sweep_config;
  sweep->add_option("--pools", sweep_config.pool_sizes, "Key pool sizes")->delimiter(',');
  sweep->add_option("--rings", sweep_config.ring_sizes, "Key ring sizes")->delimiter(',');
  sweep->add_option("--n", sweep_config.n, "Clients per key graph");
  sweep->add_option("--trials", sweep_config.pair_trials, "Ring pairs per row");
  sweep->add_option("--graph-trials", sweep_config.graph_trials, "Key graphs per row");
  sweep->add_option("--seed", seed, "Seed");
  sweep->add_option("--output", output, "Output directory");

  auto* dropout = app.add_subcommand("dropout-series", "Transmissions vs. dropouts");
  std::string dropout_config;
  std::vector<std::size_t> counts{0, 1, 5, 10, 15};
  std::size_t reps = 20;
  dropout->add_option("config", dropout_config, "Scenario INI file")
      ->required()
      ->check(CLI::ExistingFile);
  dropout->add_option("--counts", counts, "Dropout counts")->delimiter(',');
  dropout->add_option("--reps", reps, "Repetitions per count");
  dropout->add_option("--seed", seed, "Override the scenario seed");
  dropout->add_option("--output", output, "Output directory");

  auto* bench = app.add_subcommand("bench", "Relative cost of the per-hop primitives");
  scenario::BenchConfig bench_config;
  bench->add_option("--ops", bench_config.ops, "Operations")->delimiter(',');
  bench->add_option("--dim", bench_config.dim, "Model coordinates in the payload");
  bench->add_option("--iterations", bench_config.iterations, "Calls per repetition");
  bench->add_option("--reps", bench_config.repetitions, "Repetitions");
  bench->add_option("--suite", bench_config.suite, "Cipher suite");
  bench->add_option("--seed", seed, "Seed");
  bench->add_option("--output", output, "Output directory");

  auto* verify = app.add_subcommand("verify-oracle",
                                    "Compare against plain FedAvg; nonzero exit on mismatch");
  std::string verify_config;
  verify->add_option("config", verify_config, "Scenario INI file")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--seed", seed, "Override the scenario seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config, seed, output, dump_keys);
    if (*sweep) {
      if (seed) sweep_config.seed = *seed;
      return cmd_sweep(sweep_config, output);
    }
    if (*dropout) return cmd_dropout(dropout_config, seed, counts, reps, output);
    if (*bench) {
      if (seed) bench_config.seed = *seed;
      return cmd_bench(bench_config, output);
    }
    if (*verify) return cmd_verify(verify_config, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
