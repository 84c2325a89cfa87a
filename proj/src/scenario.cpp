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

#include "ppt/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "ppt/kernels.hpp"
#include "ppt/rng.hpp"
#include "ppt/topology.hpp"

namespace ppt::scenario {
namespace {

namespace pt = boost::property_tree;

// Seed streams below the scenario seed.
constexpr std::uint64_t kTargetStream = 20;
constexpr std::uint64_t kTaskStream = 30;
constexpr std::uint64_t kRoundStream = 1000;
constexpr std::uint64_t kSeriesStream = 500;
// Below the round seed.
constexpr std::uint64_t kLeaderStream = 0x1EAD00;
constexpr std::uint64_t kDropoutStream = 0xD0;
constexpr std::uint64_t kJoinStream = 0x10;
constexpr std::uint64_t kAdversaryStream = 0xADC0;

// Reads keys of one INI section and remembers which were used, so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name)
      : tree_(tree), name_(std::move(name)) {}

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!tree_) return;
    auto child = tree_->get_child_optional(key);
    if (!child) return;
    const std::string text = child->data();
    try {
      if constexpr (std::is_same_v<T, bool>) {
        out = parse_bool(text);
      } else if constexpr (std::is_same_v<T, std::string>) {
        out = text;
      } else if constexpr (std::is_floating_point_v<T>) {
        std::size_t pos = 0;
        out = static_cast<T>(std::stod(text, &pos));
        if (pos != text.size()) throw std::invalid_argument("trailing");
      } else {
        if (!text.empty() && text.front() == '-') throw std::invalid_argument("neg");
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(text, &pos, 0);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        if (v > std::numeric_limits<T>::max()) throw std::out_of_range("range");
        out = static_cast<T>(v);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": cannot parse '" + text + "'");
    }
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!used_.contains(key)) {
        throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
      }
    }
  }

 private:
  static bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected a boolean, got '" + s + "'");
  }

  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// "client@tick, client@tick"
std::vector<protocol::DropoutEvent> parse_schedule(const std::string& text) {
  std::vector<protocol::DropoutEvent> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto at = item.find('@');
    try {
      if (at == std::string::npos) throw std::invalid_argument("no @");
      std::size_t p1 = 0, p2 = 0;
      const std::string a = trim(item.substr(0, at));
      const std::string b = trim(item.substr(at + 1));
      const unsigned long c = std::stoul(a, &p1);
      const unsigned long long t = std::stoull(b, &p2);
      if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing");
      out.push_back({static_cast<ClientId>(c), static_cast<Tick>(t)});
    } catch (const std::exception&) {
      throw ConfigError("[dropout] schedule: bad entry '" + item +
                        "', expected client@tick");
    }
  }
  return out;
}

double max_abs_distance(const model::ParameterVector& a,
                        const model::ParameterVector& b) {
  const auto ra = a.to_real();
  const auto rb = b.to_real();
  double d = 0.0;
  for (std::size_t i = 0; i < ra.size() && i < rb.size(); ++i) {
    d = std::max(d, std::abs(ra[i] - rb[i]));
  }
  return d;
}

std::unique_ptr<crypto::CipherSuite> suite_for(const ScenarioConfig& config) {
  try {
    return crypto::make_suite(config.keying.suite);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[keying] suite: ") + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

// Writes to `path`, creating parent directories.
std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

// ---- configuration ----

void ScenarioConfig::validate() const {
  const auto& t = topology;
  require(t.n_potential >= 2, "[topology] n_potential must be >= 2");
  require(t.edge_probability >= 0.0 && t.edge_probability <= 1.0,
          "[topology] edge_probability must lie in [0, 1]");
  require(t.server_adjacent >= 1 && t.server_adjacent <= t.n_potential,
          "[topology] server_adjacent must lie in [1, n_potential]");

  const auto& k = keying;
  require(k.ring_size >= 1, "[keying] ring_size must be >= 1");
  require(2 * k.ring_size <= k.pool_size, "[keying] ring_size must satisfy 2l <= pool_size");
  require(k.threshold < k.ring_size, "[keying] threshold must be below ring_size");
  require(k.path_candidates >= std::max<std::size_t>(4, k.threshold + 3),
          "[keying] path_candidates must be >= max(4, threshold + 3)");
  require(k.path_candidates <= k.pool_size, "[keying] path_candidates exceeds pool_size");
  require(k.suite == "aes128gcm-ed25519" || k.suite == "lightweight",
          "[keying] suite must be aes128gcm-ed25519 or lightweight");

  const auto& p = protocol;
  require(p.n_target >= 1 && p.n_target <= t.n_potential,
          "[protocol] n_target must lie in [1, n_potential]");
  require(p.joins <= t.n_potential - p.n_target,
          "[protocol] joins exceeds the number of non-target clients");
  require(p.freshness_window >= 1, "[protocol] freshness_window must be >= 1");
  try {
    model::FixedPointFormat{p.width_bits, p.frac_bits}.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[protocol] fixed point: ") + e.what());
  }
  require(p.noise_generator < crypto::kDefaultNoiseGenerators,
          "[protocol] noise_generator must lie in [0, 3]");
  require(p.leader_retries >= 1, "[protocol] leader_retries must be >= 1");

  const auto& m = model;
  require(m.dim >= 2 && m.dim <= 8, "[model] dim must lie in [2, 8]");
  require(m.min_samples >= 1 && m.min_samples <= m.max_samples,
          "[model] need 1 <= min_samples <= max_samples");
  require(m.learning_rate > 0.0 && std::isfinite(m.learning_rate),
          "[model] learning_rate must be positive");
  require(m.skew > 0.0, "[model] skew must be positive");
  require(m.label_noise >= 0.0, "[model] label_noise must be >= 0");

  require(dropout.count < p.n_target, "[dropout] count must be below n_target");
  for (const auto& d : dropout.schedule) {
    require(d.client < t.n_potential,
            "[dropout] schedule client " + std::to_string(d.client) + " out of range");
  }
  require(adversary.gain > 0.0 && adversary.deposit > 0.0,
          "[adversary] gain and deposit must be positive");
}

ScenarioConfig parse_config(std::istream& in) {
  static const std::set<std::string> kSections{
      "scenario", "topology", "keying", "protocol", "model", "dropout", "adversary"};
  const std::string text(std::istreambuf_iterator<char>(in), {});
  // read_ini drops sections without keys, so headers are checked on the raw text.
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] != '[') continue;
      const auto close = line.find(']', first);
      if (close == std::string::npos) continue;  // read_ini reports it
      const std::string name = line.substr(first + 1, close - first - 1);
      if (!kSections.contains(name)) throw ConfigError("unknown section [" + name + "]");
    }
  }
  pt::ptree tree;
  try {
    std::istringstream ini(text);
    pt::read_ini(ini, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [name, child] : tree) {
    if (!kSections.contains(name)) {
      throw ConfigError("unknown section [" + name + "]");
    }
    if (child.empty() && !child.data().empty()) {
      throw ConfigError("key '" + name + "' outside a section");
    }
  }
  auto section = [&](const char* name) {
    return Section(tree.get_child_optional(name).get_ptr(), name);
  };

  ScenarioConfig c;
  {
    Section s = section("scenario");
    s.get("name", c.name);
    s.get("seed", c.seed);
    s.get("output_dir", c.output_dir);
    s.get("dump_keys", c.dump_keys);
    s.check_unknown();
  }
  {
    Section s = section("topology");
    s.get("n_potential", c.topology.n_potential);
    s.get("edge_probability", c.topology.edge_probability);
    s.get("server_adjacent", c.topology.server_adjacent);
    s.check_unknown();
  }
  {
    Section s = section("keying");
    s.get("pool_size", c.keying.pool_size);
    s.get("ring_size", c.keying.ring_size);
    s.get("threshold", c.keying.threshold);
    s.get("path_candidates", c.keying.path_candidates);
    s.get("suite", c.keying.suite);
    s.check_unknown();
  }
  {
    Section s = section("protocol");
    s.get("n_target", c.protocol.n_target);
    s.get("rounds", c.protocol.rounds);
    s.get("deadline", c.protocol.deadline);
    s.get("freshness_window", c.protocol.freshness_window);
    unsigned width = c.protocol.width_bits, frac = c.protocol.frac_bits;
    s.get("width_bits", width);
    s.get("frac_bits", frac);
    require(width <= 255 && frac <= 255, "[protocol] fixed-point widths out of range");
    c.protocol.width_bits = static_cast<std::uint8_t>(width);
    c.protocol.frac_bits = static_cast<std::uint8_t>(frac);
    s.get("noise_generator", c.protocol.noise_generator);
    s.get("masking", c.protocol.masking);
    s.get("shortcut_return", c.protocol.shortcut_return);
    s.get("leader_retries", c.protocol.leader_retries);
    s.get("joins", c.protocol.joins);
    s.check_unknown();
  }
  {
    Section s = section("model");
    s.get("dim", c.model.dim);
    s.get("epochs", c.model.epochs);
    s.get("learning_rate", c.model.learning_rate);
    s.get("min_samples", c.model.min_samples);
    s.get("max_samples", c.model.max_samples);
    s.get("skew", c.model.skew);
    s.get("label_noise", c.model.label_noise);
    s.check_unknown();
  }
  {
    Section s = section("dropout");
    s.get("count", c.dropout.count);
    s.get("include_leader", c.dropout.include_leader);
    s.get("max_tick", c.dropout.max_tick);
    std::string schedule;
    s.get("schedule", schedule);
    c.dropout.schedule = parse_schedule(schedule);
    s.check_unknown();
  }
  {
    Section s = section("adversary");
    s.get("curious", c.adversary.curious);
    s.get("forger", c.adversary.forger);
    s.get("tamper_hops", c.adversary.tamper_hops);
    s.get("inject_per_hop", c.adversary.inject_per_hop);
    s.get("byzantine_claims", c.adversary.byzantine_claims);
    s.get("forge_claim_signature", c.adversary.forge_claim_signature);
    s.get("colluder_pair", c.adversary.colluder_pair);
    s.get("deposits", c.adversary.deposits);
    s.get("gain", c.adversary.gain);
    s.get("deposit", c.adversary.deposit);
    s.check_unknown();
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

// ---- scenario runs ----

std::size_t ScenarioResult::completed_rounds() const {
  return static_cast<std::size_t>(
      std::count_if(rounds.begin(), rounds.end(), [](const auto& r) { return r.completed; }));
}

double ScenarioResult::average_transmissions() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rounds) {
    if (!r.completed) continue;
    sum += static_cast<double>(r.transmissions);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Setup prepare(const ScenarioConfig& config) {
  config.validate();
  const auto suite = suite_for(config);
  protocol::NetworkConfig nc;
  nc.n_potential = config.topology.n_potential;
  nc.edge_probability = config.topology.edge_probability;
  nc.server_adjacent = config.topology.server_adjacent;
  nc.keying.pool_size = config.keying.pool_size;
  nc.keying.ring_size = config.keying.ring_size;
  nc.keying.threshold = config.keying.threshold;
  nc.keying.path_candidates = config.keying.path_candidates;
  nc.seed = config.seed;

  Setup setup;
  setup.network = protocol::build_network(nc, *suite);
  Rng rng(derive_seed(config.seed, kTargetStream));
  for (std::uint32_t c :
       rng.sample_distinct(static_cast<std::uint32_t>(config.topology.n_potential),
                           static_cast<std::uint32_t>(config.protocol.n_target))) {
    setup.targets.push_back(c);
  }
  std::sort(setup.targets.begin(), setup.targets.end());
  return setup;
}

namespace {

std::uint64_t round_seed(const ScenarioConfig& config, std::uint64_t round) {
  return derive_seed(config.seed, kRoundStream + round);
}

std::vector<protocol::DropoutEvent> schedule_dropouts(
    const ScenarioConfig& config, const std::vector<ClientId>& targets,
    ClientId leader, std::uint64_t seed) {
  std::vector<protocol::DropoutEvent> out = config.dropout.schedule;
  if (config.dropout.count == 0) return out;
  std::vector<ClientId> pool;
  for (ClientId t : targets) {
    if (t != leader || config.dropout.include_leader) pool.push_back(t);
  }
  const Tick max_tick = config.dropout.max_tick != 0
                            ? config.dropout.max_tick
                            : std::max<Tick>(1, 2 * (targets.size() - 1));
  // Picks are a prefix of one permutation and each client's tick has its own
  // stream, so a larger count adds dropouts without moving the others.
  const std::uint64_t stream = derive_seed(seed, kDropoutStream);
  Rng rng(stream);
  const auto picks = rng.sample_distinct(
      static_cast<std::uint32_t>(pool.size()),
      static_cast<std::uint32_t>(std::min(config.dropout.count, pool.size())));
  for (std::uint32_t i : picks) {
    Rng tick_rng(derive_seed(stream, pool[i]));
    out.push_back({pool[i], 1 + tick_rng.below(max_tick)});
  }
  return out;
}

std::vector<protocol::JoinRequest> schedule_joins(const ScenarioConfig& config,
                                                  const std::vector<ClientId>& targets,
                                                  std::uint64_t seed) {
  std::vector<protocol::JoinRequest> out;
  if (config.protocol.joins == 0) return out;
  std::vector<bool> is_target(config.topology.n_potential, false);
  for (ClientId t : targets) is_target[t] = true;
  std::vector<ClientId> pool;
  for (ClientId c = 0; c < config.topology.n_potential; ++c) {
    if (!is_target[c]) pool.push_back(c);
  }
  Rng rng(derive_seed(seed, kJoinStream));
  const auto picks = rng.sample_distinct(
      static_cast<std::uint32_t>(pool.size()),
      static_cast<std::uint32_t>(std::min(config.protocol.joins, pool.size())));
  for (std::uint32_t i : picks) {
    out.push_back({pool[i], 1 + rng.below(std::max<std::size_t>(1, targets.size()))});
  }
  return out;
}

struct Locals {
  std::vector<ClientId> clients;
  std::vector<model::ParameterVector> models;
  std::map<ClientId, std::size_t> index;

  const model::ParameterVector& of(ClientId c) const { return models[index.at(c)]; }
};

Locals train(const model::SyntheticTask& task, std::vector<ClientId> clients,
             const model::ParameterVector& global, const ModelSpec& spec,
             bool reference) {
  Locals out;
  out.clients = std::move(clients);
  out.models = reference
                   ? kernels::serial::train_clients(task, out.clients, global,
                                                    spec.epochs, spec.learning_rate)
                   : kernels::omp::train_clients(task, out.clients, global,
                                                 spec.epochs, spec.learning_rate);
  for (std::size_t i = 0; i < out.clients.size(); ++i) out.index[out.clients[i]] = i;
  return out;
}

model::ParameterVector fedavg_over(const model::SyntheticTask& task,
                                   const Locals& locals,
                                   const std::vector<ClientId>& members) {
  std::vector<model::ParameterVector> models;
  std::vector<std::uint64_t> weights;
  for (ClientId c : members) {
    models.push_back(locals.of(c));
    weights.push_back(task.sample_count(c));
  }
  return model::fedavg_reference(models, weights);
}

void run_adversaries(const ScenarioConfig& config, const protocol::RoundResult& round,
                     const protocol::Network& net, const crypto::CipherSuite& suite,
                     const protocol::RoundInputs& inputs,
                     const std::vector<ClientId>& targets,
                     std::vector<adversary::AttackReport>& reports) {
  const auto& a = config.adversary;
  if (a.curious) {
    bool leaked = false;
    leaked |= !adversary::curious_observer_audit(round, net, suite, std::nullopt, inputs)
                   .leaked.empty();
    for (ClientId t : targets) {
      if (leaked) break;
      leaked |= !adversary::curious_observer_audit(round, net, suite, t, inputs)
                     .leaked.empty();
    }
    reports.push_back({config.name, "curious", leaked, 0});
    reports.push_back({config.name, "curious-differential",
                       !adversary::differential_exposures(round, inputs).empty(), 0});
  }
  if (a.colluder_pair) {
    adversary::AttackReport report{config.name, "colluder-pair", false, 0};
    if (auto position = adversary::find_collusion_position(round)) {
      adversary::AdversaryProfile profile;
      profile.kind = adversary::Kind::kColluderPair;
      profile.members = {position->b, position->c};
      profile.gain = a.gain;
      profile.deposit = a.deposit;
      const auto strategy = adversary::rational_strategy(profile, a.deposits);
      position->b_strategy = strategy;
      position->c_strategy = strategy;
      std::optional<adversary::DepositLedger> ledger;
      if (a.deposits) {
        ledger.emplace(std::llround(a.deposit));
        ledger->post(position->b);
        ledger->post(position->c);
      }
      const auto outcome = adversary::execute_collusion(
          *position, round, inputs, ledger ? &*ledger : nullptr);
      report.success = outcome.success;
      report.deposits_moved = outcome.settlement.moved();
    }
    reports.push_back(report);
  }
}

}  // namespace

ScenarioResult simulate(const ScenarioConfig& config, const Setup* setup) {
  config.validate();
  const auto suite = suite_for(config);
  Setup owned;
  if (setup == nullptr) {
    owned = prepare(config);
  } else {
    owned = *setup;
  }
  protocol::Network& net = owned.network;
  const std::vector<ClientId>& targets = owned.targets;

  model::SyntheticTaskConfig tc;
  tc.clients = config.topology.n_potential;
  tc.dim = config.model.dim;
  tc.min_samples = config.model.min_samples;
  tc.max_samples = config.model.max_samples;
  tc.skew = config.model.skew;
  tc.label_noise = config.model.label_noise;
  tc.seed = derive_seed(config.seed, kTaskStream);
  const model::SyntheticTask task(tc);

  const model::FixedPointFormat format{config.protocol.width_bits,
                                       config.protocol.frac_bits};
  ScenarioResult result;
  result.name = config.name;
  result.targets = targets;
  result.final_model = model::ParameterVector::zeros(config.model.dim, format);
  result.oracle_model = result.final_model;

  std::set<ClientId> leader_history;
  std::set<ClientId> server_adjacent = net.server_adjacent;
  std::vector<std::string> round_hashes;

  for (std::uint64_t r = 0; r < config.protocol.rounds; ++r) {
    const std::uint64_t seed = round_seed(config, r);
    const model::ParameterVector& global = result.final_model;
    RoundRecord record;
    record.round = r;

    protocol::RoundConfig rc;
    rc.round = r;
    rc.seed = seed;
    rc.targets = targets;
    rc.leader_history = leader_history;
    rc.deadline = config.protocol.deadline;
    rc.freshness_window = config.protocol.freshness_window;
    rc.noise_generator = config.protocol.noise_generator;
    rc.masking = config.protocol.masking;
    rc.shortcut_return = config.protocol.shortcut_return;
    rc.leader_retries = config.protocol.leader_retries;
    rc.joins = schedule_joins(config, targets, seed);

    protocol::RoundResult round;
    std::vector<ClientId> participants = targets;
    for (const auto& j : rc.joins) participants.push_back(j.client);
    Locals locals = train(task, participants, global, config.model, false);
    protocol::RoundInputs inputs;
    for (ClientId c : participants) {
      inputs.updates.emplace(
          c, model::encode(model::local_update(locals.of(c), global),
                           static_cast<double>(task.sample_count(c))));
    }

    try {
      rc.forced_leader = protocol::select_leader(targets, server_adjacent,
                                                 leader_history,
                                                 derive_seed(seed, kLeaderStream));
      rc.dropouts = schedule_dropouts(config, targets, *rc.forced_leader, seed);

      protocol::RoundHooks hooks;
      std::shared_ptr<adversary::EnvelopeAttacker> attacker;
      if (config.adversary.forger) {
        attacker = std::make_shared<adversary::EnvelopeAttacker>(
            derive_seed(seed, kAdversaryStream), config.adversary.tamper_hops,
            config.adversary.inject_per_hop);
        hooks.intercept = [attacker](const protocol::HopInfo& hop, const Bytes& wire) {
          return (*attacker)(hop, wire);
        };
      }
      std::optional<protocol::ClaimVerdict> claim_verdict;
      if (config.adversary.byzantine_claims) {
        Rng claim_rng(derive_seed(seed, kAdversaryStream + 1));
        const std::size_t at_hop = 1 + claim_rng.below(std::max<std::size_t>(1, targets.size() / 2));
        auto hops = std::make_shared<std::size_t>(0);
        const bool forge = config.adversary.forge_claim_signature;
        const crypto::CipherSuite* s = suite.get();
        const std::uint64_t pick = claim_rng.next_u64();
        hooks.after_hop = [&claim_verdict, hops, at_hop, forge, s, pick,
                           &targets](protocol::RoundContext& ctx) {
          if (++*hops != at_hop || claim_verdict) return;
          std::vector<ClientId> liars;
          for (ClientId t : targets) {
            if (t != ctx.holder() && ctx.clients()[t].alive) liars.push_back(t);
          }
          if (liars.empty()) return;
          claim_verdict = adversary::inject_byzantine_claim(
              ctx, *s, liars[pick % liars.size()], forge);
        };
      }

      round = protocol::run_round(net, rc, inputs, *suite, hooks);

      if (attacker) {
        result.attacks.push_back({config.name, "forger", round.injected_accepted > 0, 0});
      }
      if (config.adversary.byzantine_claims) {
        result.attacks.push_back({config.name, "byzantine-claimer",
                                  claim_verdict && claim_verdict->accepted(), 0});
      }
    } catch (const AbortRoundError& e) {
      round = protocol::RoundResult{};
      round.abort_reason = std::string("no-leader: ") + e.what();
      round.transcript_hash = protocol::transcript_hash({});
    }

    record.completed = round.completed;
    record.abort_reason = round.abort_reason;
    record.leader = round.leader;
    record.transmissions = round.transmissions;
    record.ticks = round.ticks;
    record.dropouts = round.dropouts;
    record.detected_dropouts = round.detected_dropouts;
    record.rollbacks = round.rollbacks;
    record.rejections = round.rejections;
    record.accepted_joins = round.accepted_joins;
    record.rejected_joins = round.rejected_joins;
    record.transcript_hash = round.transcript_hash;

    // The plain FedAvg track trains its own locals from its own global model
    // with the serial kernel, on the clients the round actually aggregated.
    const model::ParameterVector oracle_global = result.oracle_model;
    model::ParameterVector next = global;
    model::ParameterVector oracle_next = oracle_global;
    if (round.completed) {
      record.contributors = round.contributors.size();
      record.sum_weight_raw = round.aggregate->weight_raw();
      next = protocol::apply_round(round, global);
      leader_history.insert(round.leader);
      std::vector<ClientId> members = round.contributors;
      std::sort(members.begin(), members.end());
      const Locals reference = train(task, members, oracle_global, config.model, true);
      oracle_next = fedavg_over(task, reference, members);
      record.full_oracle_distance =
          max_abs_distance(next, fedavg_over(task, locals, targets));
      run_adversaries(config, round, net, *suite, inputs, targets, result.attacks);
    }
    record.oracle_match = next == oracle_next;
    record.oracle_distance = max_abs_distance(next, oracle_next);
    if (!record.oracle_match) ++result.oracle_mismatches;
    record.checkpoint = "checkpoints/round_" + std::to_string(r) + ".bin";

    result.final_model = next;
    result.oracle_model = oracle_next;
    result.checkpoints.push_back(next);
    round_hashes.push_back(round.transcript_hash);
    result.transcripts.push_back(std::move(round.transcript));
    result.rounds.push_back(record);
  }
  result.scenario_hash = protocol::transcript_hash(round_hashes);
  result.setup = std::move(owned);
  return result;
}

std::filesystem::path output_root() {
  const char* env = std::getenv("PPT_OUTPUT_ROOT");
  return (env != nullptr && *env != '\0') ? std::filesystem::path(env)
                                          : std::filesystem::path("out");
}

void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rows) {
  out << kRoundsHeader << '\n';
  for (const auto& r : rows) {
    out << r.round << ',' << (r.completed ? 1 : 0) << ',' << r.abort_reason << ','
        << r.leader << ',' << r.sum_weight_raw << ',' << r.contributors << ','
        << r.transmissions << ',' << r.ticks << ',' << r.dropouts << ','
        << r.detected_dropouts << ',' << r.rollbacks << ',' << r.rejections << ','
        << r.accepted_joins << ',' << r.rejected_joins << ','
        << (r.oracle_match ? 1 : 0) << ',' << r.checkpoint << ','
        << r.transcript_hash << '\n';
  }
}

void write_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json summary;
  summary["name"] = result.name;
  summary["seed"] = config.seed;
  summary["rounds"] = result.rounds.size();
  summary["completed_rounds"] = result.completed_rounds();
  summary["average_transmissions"] = result.average_transmissions();
  summary["oracle_mismatches"] = result.oracle_mismatches;
  summary["scenario_hash"] = result.scenario_hash;
  summary["targets"] = result.targets.size();
  summary["final_model"] = result.final_model.to_real();
  summary["round_hashes"] = nlohmann::json::array();
  for (const auto& r : result.rounds) summary["round_hashes"].push_back(r.transcript_hash);
  std::size_t attack_successes = 0;
  for (const auto& a : result.attacks) attack_successes += a.success ? 1 : 0;
  summary["attack_reports"] = result.attacks.size();
  summary["attack_successes"] = attack_successes;
  open_output(dir / "summary.json") << summary.dump(2) << '\n';

  if (result.rounds.empty()) return;

  {
    auto out = open_output(dir / "graph.edges");
    topology::write_edge_list(out, result.setup.network.physical);
  }
  {
    auto out = open_output(dir / "challenges.bin", std::ios::binary);
    keying::write_challenge_log(out, result.setup.network.keys.challenge_log);
  }
  if (config.dump_keys) {
    auto out = open_output(dir / "keys.txt");
    keying::dump_keys(out, result.setup.network.keys);
  }

  for (std::size_t r = 0; r < result.rounds.size(); ++r) {
    auto out = open_output(dir / ("transcript_round" + std::to_string(r) + ".jsonl"));
    for (const auto& line : result.transcripts[r]) out << line << '\n';
    const Bytes blob = model::serialize(result.checkpoints[r]);
    auto cp = open_output(dir / result.rounds[r].checkpoint, std::ios::binary);
    cp.write(reinterpret_cast<const char*>(blob.data()),
             static_cast<std::streamsize>(blob.size()));
  }
  {
    auto out = open_output(dir / "rounds.csv");
    write_rounds_csv(out, result.rounds);
  }
  {
    auto out = open_output(dir / "attacks.csv");
    adversary::write_attack_reports(out, result.attacks);
  }
}

// ---- connectivity sweep ----

std::vector<SweepRow> run_connectivity_sweep(const SweepConfig& config) {
  require(config.n >= 2, "sweep: n must be >= 2");
  require(config.pair_trials >= 1 && config.graph_trials >= 1,
          "sweep: trial counts must be positive");
  std::vector<SweepRow> rows;
  std::uint64_t stream = 0;
  for (std::size_t pool : config.pool_sizes) {
    for (std::size_t ring : config.ring_sizes) {
      require(2 * ring <= pool, "sweep: ring " + std::to_string(ring) +
                                    " violates 2l <= pool " + std::to_string(pool));
      SweepRow row;
      row.pool_size = pool;
      row.ring_size = ring;
      row.n = config.n;
      row.analytic_p = topology::shared_key_probability(pool, ring);
      const std::uint64_t seed = derive_seed(config.seed, stream++);
      row.empirical_p =
          kernels::omp::ring_overlap_frequency(pool, ring, config.pair_trials, seed, 0);
      const auto trials = kernels::omp::key_graph_trials(
          config.n, pool, ring, 0, config.graph_trials, derive_seed(seed, 1));
      std::size_t connected = 0;
      for (const auto& t : trials) connected += t.connected ? 1 : 0;
      row.connected_fraction =
          static_cast<double>(connected) / static_cast<double>(trials.size());
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n' << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.pool_size << ',' << r.ring_size << ',' << r.n << ',' << r.analytic_p
        << ',' << r.empirical_p << ',' << r.connected_fraction << '\n';
  }
}

// ---- dropout series ----

std::vector<DropoutRow> run_dropout_series(const ScenarioConfig& base,
                                           const std::vector<std::size_t>& counts,
                                           std::size_t repetitions) {
  base.validate();
  require(repetitions >= 1, "dropout series: repetitions must be >= 1");
  for (std::size_t k : counts) {
    require(k < base.protocol.n_target, "dropout series: count " + std::to_string(k) +
                                            " must be below n_target");
  }
  // cell[r][i]: repetition r, count i.
  std::vector<std::vector<RoundRecord>> cells(repetitions,
                                              std::vector<RoundRecord>(counts.size()));
  std::exception_ptr failure;
  std::mutex failure_mu;
  const auto reps = static_cast<long>(repetitions);
#pragma omp parallel for schedule(dynamic)
  for (long r = 0; r < reps; ++r) {
    try {
      ScenarioConfig rep = base;
      rep.seed = derive_seed(base.seed, kSeriesStream + static_cast<std::uint64_t>(r));
      rep.protocol.rounds = 1;
      rep.adversary = AdversarySpec{};
      const Setup setup = prepare(rep);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        ScenarioConfig cell = rep;
        cell.dropout.count = counts[i];
        cells[r][i] = simulate(cell, &setup).rounds.front();
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<DropoutRow> rows;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    DropoutRow row;
    row.dropouts = counts[i];
    std::size_t completed = 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
      const RoundRecord& rec = cells[r][i];
      row.oracle_distance = std::max(row.oracle_distance, rec.oracle_distance);
      if (!rec.completed) continue;
      ++completed;
      row.transmissions += static_cast<double>(rec.transmissions);
      row.contributors += static_cast<double>(rec.contributors);
      row.full_oracle_distance += rec.full_oracle_distance;
    }
    row.completed = static_cast<double>(completed) / static_cast<double>(repetitions);
    if (completed > 0) {
      const auto c = static_cast<double>(completed);
      row.transmissions /= c;
      row.contributors /= c;
      row.full_oracle_distance /= c;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_dropout_csv(std::ostream& out, const std::vector<DropoutRow>& rows) {
  out << kDropoutHeader << '\n' << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.dropouts << ',' << r.completed << ',' << r.transmissions << ','
        << r.contributors << ',' << r.oracle_distance << ','
        << r.full_oracle_distance << '\n';
  }
}

// ---- primitive benchmark ----

namespace {
// Keeps the timed loop bodies observable.
volatile std::uint64_t bench_sink = 0;
}  // namespace

const std::vector<std::string>& bench_ops() {
  static const std::vector<std::string> ops = BenchConfig{}.ops;
  return ops;
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  const auto& known = bench_ops();
  for (const auto& op : config.ops) {
    require(std::find(known.begin(), known.end(), op) != known.end(),
            "bench: unknown op '" + op + "'");
  }
  require(config.iterations >= 1 && config.repetitions >= 1,
          "bench: iterations and repetitions must be positive");
  std::unique_ptr<crypto::CipherSuite> suite;
  try {
    suite = crypto::make_suite(config.suite);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("bench: ") + e.what());
  }

  // Payload: an encoded update of `dim` coordinates plus its weight slot.
  Rng rng(config.seed);
  std::vector<double> values(config.dim);
  for (double& v : values) v = rng.normal();
  const model::EncodedUpdate update =
      model::encode(model::ParameterVector::from_real(values), 3.0);
  const std::size_t slots = update.packed.dim();
  const crypto::NoiseVector noise = crypto::generate_noise(slots, 0, config.seed);
  const model::EncodedUpdate masked = model::apply_mask(update, noise);
  crypto::SymmetricKey key{};
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(rng.below(256));
  const Bytes plaintext = model::serialize(masked.packed);
  const Bytes ciphertext = suite->seal(key, plaintext);
  const crypto::SigningKeyPair signer = suite->signing_keypair(config.seed);
  const Bytes message = crypto::signed_message(ciphertext, 7);
  const Bytes signature = suite->sign(signer.secret_key, message);

  std::uint64_t sink = 0;
  auto run_op = [&](const std::string& op, std::size_t i) {
    if (op == "noise_generation") {
      sink += crypto::generate_noise(slots, 0, config.seed + i).values.back();
    } else if (op == "noise_addition") {
      sink += model::apply_mask(update, noise).weight_raw();
    } else if (op == "noise_subtraction") {
      sink += model::remove_mask(masked, noise).weight_raw();
    } else if (op == "encryption") {
      sink += suite->seal(key, plaintext).size();
    } else if (op == "decryption") {
      sink += suite->open(key, ciphertext).size();
    } else if (op == "signature") {
      sink += suite->sign(signer.secret_key, message).size();
    } else {
      sink += suite->verify(signer.public_key, message, signature) ? 1 : 0;
    }
  };

  std::vector<BenchRow> rows;
  for (const auto& op : config.ops) {
    std::vector<double> samples;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < config.iterations; ++i) run_op(op, i);
      const auto t1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                        static_cast<double>(config.iterations));
    }
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(samples.size());
    BenchRow row;
    row.op = op;
    row.mean_us = mean;
    row.cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    rows.push_back(row);
  }
  bench_sink = sink;
  const double first = rows.empty() ? 0.0 : rows.front().mean_us;
  for (auto& row : rows) row.relative = first > 0.0 ? row.mean_us / first : 0.0;
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchHeader << '\n' << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.op << ',' << r.mean_us << ',' << r.cv << ',' << r.relative << '\n';
  }
}

}  // namespace ppt::scenario
