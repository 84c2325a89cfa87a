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

// Seeded experiments on top of the protocol simulator: multi-round training
// scenarios, connectivity sweeps, dropout series and a primitive benchmark,
// plus the writers for their CSV / JSON outputs.

#ifndef PPT_SCENARIO_HPP_
#define PPT_SCENARIO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ppt/adversary.hpp"
#include "ppt/common.hpp"
#include "ppt/model.hpp"
#include "ppt/protocol.hpp"

namespace ppt::scenario {

struct TopologySpec {
  std::size_t n_potential = 200;
  double edge_probability = 0.182;
  std::size_t server_adjacent = 10;
};

struct KeyingSpec {
  std::size_t pool_size = 2000;
  std::size_t ring_size = 20;
  std::size_t threshold = 0;
  std::size_t path_candidates = keying::kDefaultPathCandidates;
  std::string suite = "aes128gcm-ed25519";
};

struct ProtocolSpec {
  std::size_t n_target = 100;
  std::size_t rounds = 1;
  Tick deadline = 0;  // 0 -> 4 * n_target
  Tick freshness_window = 10;
  std::uint8_t width_bits = 32;
  std::uint8_t frac_bits = 16;
  unsigned noise_generator = 0;
  bool masking = true;
  bool shortcut_return = false;
  std::size_t leader_retries = 3;
  std::size_t joins = 0;  // non-target clients asking to join each round
};

struct ModelSpec {
  std::size_t dim = 4;
  std::size_t epochs = 1;
  double learning_rate = 0.05;
  std::size_t min_samples = 4;
  std::size_t max_samples = 60;
  double skew = 3.0;
  double label_noise = 0.01;
};

struct DropoutSpec {
  std::size_t count = 0;  // random target dropouts per round
  bool include_leader = false;
  Tick max_tick = 0;      // random ticks in [1, max_tick]; 0 -> 2(n_target-1)
  std::vector<protocol::DropoutEvent> schedule;  // applied every round
};

struct AdversarySpec {
  bool curious = false;
  bool forger = false;
  std::size_t tamper_hops = 2;
  std::size_t inject_per_hop = 1;
  bool byzantine_claims = false;
  bool forge_claim_signature = false;
  bool colluder_pair = false;
  bool deposits = true;
  double gain = 1.0;
  double deposit = 2.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  TopologySpec topology;
  KeyingSpec keying;
  ProtocolSpec protocol;
  ModelSpec model;
  DropoutSpec dropout;
  AdversarySpec adversary;
  std::string output_dir;  // relative to the output root unless absolute
  bool dump_keys = false;

  // Throws ConfigError with a diagnostic for out-of-range values.
  void validate() const;
};

// INI text with sections [scenario] [topology] [keying] [protocol] [model]
// [dropout] [adversary]. Unknown sections or keys are a ConfigError.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

struct RoundRecord {
  std::uint64_t round = 0;
  bool completed = false;
  std::string abort_reason;
  ClientId leader = 0;
  std::uint64_t sum_weight_raw = 0;
  std::size_t contributors = 0;
  std::size_t transmissions = 0;
  Tick ticks = 0;
  std::size_t dropouts = 0;
  std::size_t detected_dropouts = 0;
  std::size_t rollbacks = 0;
  std::size_t rejections = 0;
  std::size_t accepted_joins = 0;
  std::size_t rejected_joins = 0;
  bool oracle_match = true;  // vs. the independent FedAvg track
  double oracle_distance = 0.0;  // max |PPT - oracle| over coordinates
  // Same, against FedAvg over every target of the round (dropouts included).
  double full_oracle_distance = 0.0;
  std::string checkpoint;
  std::string transcript_hash;
};

// Everything a scenario needs before its first round.
struct Setup {
  protocol::Network network;
  std::vector<ClientId> targets;  // ascending
};

struct ScenarioResult {
  std::string name;
  std::vector<RoundRecord> rounds;
  std::vector<std::vector<std::string>> transcripts;  // per round
  std::vector<adversary::AttackReport> attacks;
  std::vector<model::ParameterVector> checkpoints;    // global after each round
  model::ParameterVector final_model;
  model::ParameterVector oracle_model;
  std::string scenario_hash;  // sha256 over the round transcript hashes
  std::vector<ClientId> targets;
  std::size_t oracle_mismatches = 0;
  Setup setup;  // network state after the last round


  std::size_t completed_rounds() const;
  double average_transmissions() const;  // over completed rounds
};

// Builds the network and the target set for `config`.
Setup prepare(const ScenarioConfig& config);

// Runs every round in memory. With `setup` the given network is copied
// instead of being rebuilt.
ScenarioResult simulate(const ScenarioConfig& config,
                        const Setup* setup = nullptr);

// Writes summary.json under `dir`, and unless there were zero rounds also
// transcript_round<R>.jsonl, checkpoints/round_<R>.bin, rounds.csv,
// attacks.csv, graph.edges, challenges.bin and (with dump_keys) keys.txt.
void write_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                   const std::filesystem::path& dir);

// $PPT_OUTPUT_ROOT, or "out".
std::filesystem::path output_root();

// rounds.csv header.
inline constexpr const char* kRoundsHeader =
    "round,completed,abort_reason,leader,sum_weight,contributors,"
    "transmissions,ticks,dropouts,detected_dropouts,rollbacks,rejections,"
    "accepted_joins,rejected_joins,oracle_match,checkpoint,transcript_hash";

void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rows);

// ---- connectivity sweep ----

struct SweepRow {
  std::size_t pool_size = 0;
  std::size_t ring_size = 0;
  std::size_t n = 0;
  double analytic_p = 0.0;
  double empirical_p = 0.0;
  double connected_fraction = 0.0;
};

struct SweepConfig {
  std::vector<std::size_t> pool_sizes{2000};
  std::vector<std::size_t> ring_sizes{0, 5, 10, 15, 20};
  std::size_t n = 200;
  std::size_t pair_trials = 2000;   // ring pairs for empirical p
  std::size_t graph_trials = 20;    // key graphs for connected_fraction
  std::uint64_t seed = 1;
};

// One row per (pool, ring) with 2 * ring <= pool; others raise ConfigError.
std::vector<SweepRow> run_connectivity_sweep(const SweepConfig& config);

inline constexpr const char* kSweepHeader =
    "pool_size,ring_size,n,analytic_p,empirical_p,connected_fraction";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// ---- dropout series ----

struct DropoutRow {
  std::size_t dropouts = 0;
  double completed = 0.0;           // fraction of repetitions
  double transmissions = 0.0;       // mean over completed repetitions
  double contributors = 0.0;
  double oracle_distance = 0.0;     // max over repetitions, survivor oracle
  double full_oracle_distance = 0.0;  // mean, vs. all-target FedAvg
};

// One single-round scenario per (repetition, count). Repetition r uses the
// network of seed derive_seed(base.seed, 500 + r) for every count, so rows
// are paired. Throws ConfigError if a count is not below n_target.
std::vector<DropoutRow> run_dropout_series(const ScenarioConfig& base,
                                           const std::vector<std::size_t>& counts,
                                           std::size_t repetitions = 20);

inline constexpr const char* kDropoutHeader =
    "dropouts,completed,transmissions,contributors,oracle_distance,"
    "full_oracle_distance";
void write_dropout_csv(std::ostream& out, const std::vector<DropoutRow>& rows);

// ---- primitive benchmark ----

struct BenchRow {
  std::string op;
  double mean_us = 0.0;      // per operation
  double cv = 0.0;           // stddev / mean across repetitions
  double relative = 0.0;     // mean / mean of the first op
};

struct BenchConfig {
  std::vector<std::string> ops{"noise_generation", "noise_addition",
                               "noise_subtraction", "encryption",
                               "decryption", "signature", "verification"};
  std::size_t dim = 1000;
  std::size_t iterations = 200;
  std::size_t repetitions = 5;
  std::string suite = "aes128gcm-ed25519";
  std::uint64_t seed = 1;
};

const std::vector<std::string>& bench_ops();
std::vector<BenchRow> run_bench(const BenchConfig& config);

inline constexpr const char* kBenchHeader = "op,mean_us,cv,relative";
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ppt::scenario

#endif  // PPT_SCENARIO_HPP_
