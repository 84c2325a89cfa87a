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

// Adversaries against a round: curious observers, envelope forgers and
// replayers, false holder claims, and a colluding pair around a victim,
// together with the deposit game that deters the pair.

#ifndef PPT_ADVERSARY_HPP_
#define PPT_ADVERSARY_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ppt/common.hpp"
#include "ppt/crypto.hpp"
#include "ppt/model.hpp"
#include "ppt/protocol.hpp"
#include "ppt/rng.hpp"

namespace ppt::adversary {

enum class Strategy { kCollude, kCounter };
const char* to_string(Strategy s);

enum class Kind { kCurious, kForger, kByzantineClaimer, kColluderPair };
const char* to_string(Kind k);

struct AdversaryProfile {
  Kind kind = Kind::kCurious;
  std::vector<ClientId> members;
  Strategy strategy = Strategy::kCounter;
  double gain = 1.0;
  double deposit = 2.0;
};

// ---- supervision-and-report game ----

struct Payoff {
  double b = 0;
  double c = 0;
  friend bool operator==(const Payoff&, const Payoff&) = default;
};

class PayoffMatrix {
 public:
  // (collude, collude) = (g, g); (collude, counter) = (-d, d);
  // (counter, collude) = (d, -d); (counter, counter) = (0, 0).
  static PayoffMatrix from_gain_and_deposit(double gain, double deposit);

  const Payoff& at(Strategy b, Strategy c) const { return entries_[idx(b)][idx(c)]; }
  void set(Strategy b, Strategy c, Payoff p) { entries_[idx(b)][idx(c)] = p; }

 private:
  static std::size_t idx(Strategy s) { return s == Strategy::kCollude ? 0 : 1; }
  std::array<std::array<Payoff, 2>, 2> entries_{};
};

struct Equilibrium {
  Strategy b;
  Strategy c;
  bool weak = false;  // some unilateral deviation is payoff-neutral
  friend bool operator==(const Equilibrium&, const Equilibrium&) = default;
};

// Pure profiles where neither player strictly gains by deviating, in the
// order (collude,collude), (collude,counter), (counter,collude),
// (counter,counter).
std::vector<Equilibrium> pure_nash_equilibria(const PayoffMatrix& m);

// Counter-collusion when g <= d (ties go to counter-collusion), collusion
// when g > d or when deposits are not enforced.
Strategy rational_strategy(const AdversaryProfile& profile,
                           bool deposits_enabled = true);

struct Report {
  ClientId reporter = 0;
  ClientId accused = 0;
  bool evidence = false;  // the colluding message is on record
};

struct Settlement {
  std::int64_t transferred = 0;  // units moved between players
  std::int64_t confiscated = 0;
  std::size_t rejected_reports = 0;
  std::int64_t moved() const { return transferred + confiscated; }
};

// Integer deposit accounting.
class DepositLedger {
 public:
  explicit DepositLedger(std::int64_t deposit) : deposit_(deposit) {}

  void post(ClientId client) { balances_[client] += deposit_; }
  std::int64_t balance(ClientId client) const;
  std::int64_t confiscated_total() const { return confiscated_; }

  // Mutual reports confiscate both deposits. Otherwise a report with evidence
  // moves one deposit from the accused to the reporter and a report without
  // evidence is rejected.
  Settlement resolve(const std::vector<Report>& reports);

 private:
  std::int64_t deposit_;
  std::map<ClientId, std::int64_t> balances_;
  std::int64_t confiscated_ = 0;
};

// ---- passive observers ----

struct AuditResult {
  std::vector<model::EncodedUpdate> derivable;
  std::vector<ClientId> leaked;  // other clients whose X_i is in `derivable`
};

// Every plaintext `observer` can recover from the round's traffic: payloads
// on links it is an endpoint of, payloads on links whose key material it
// holds entirely (checked by actual decryption), and for the leader also the
// noise and the unmasked total. nullopt models a keyless eavesdropper.
AuditResult curious_observer_audit(const protocol::RoundResult& round,
                                   const protocol::Network& net,
                                   const crypto::CipherSuite& suite,
                                   std::optional<ClientId> observer,
                                   const protocol::RoundInputs& truth);

struct DifferentialExposure {
  ClientId observer = 0;
  ClientId exposed = 0;
};

// Individual updates an observer learns by subtracting a running sum it sent
// from one it later received (a leaf returning the sum to its parent).
std::vector<DifferentialExposure> differential_exposures(
    const protocol::RoundResult& round, const protocol::RoundInputs& truth);

// ---- collusion ----

struct CollusionSetup {
  ClientId b = 0;
  ClientId c = 0;
  ClientId victim = 0;
  Strategy b_strategy = Strategy::kCollude;
  Strategy c_strategy = Strategy::kCollude;
};

struct AttackOutcome {
  ClientId victim = 0;
  std::optional<model::EncodedUpdate> recovered;
  bool success = false;  // recovered equals the victim's true X_i
  bool detected = false;
  Settlement settlement;
};

// Requires consecutive delivered forwards b -> victim -> c, else throws
// AttackInfeasibleError. When both collude, c subtracts what b sent from
// what it received. Otherwise the counter-colluding side reports and
// `deposits` (when given) settles the reports.
AttackOutcome execute_collusion(const CollusionSetup& setup,
                                const protocol::RoundResult& round,
                                const protocol::RoundInputs& truth,
                                DepositLedger* deposits);

// First (b, victim, c) with consecutive delivered forward hops, if any.
std::optional<CollusionSetup> find_collusion_position(
    const protocol::RoundResult& round);

// ---- active adversaries ----

// Stateful in-transit attacker: mutates the legitimate envelope on the first
// `tamper_hops` hops (first transmission only, so the retry goes through),
// and injects `inject_per_hop` forged or replayed envelopes per transmission.
class EnvelopeAttacker {
 public:
  EnvelopeAttacker(std::uint64_t seed, std::size_t tamper_hops,
                   std::size_t inject_per_hop);

  protocol::Interception operator()(const protocol::HopInfo& hop, const Bytes& wire);
  std::size_t injected() const { return injected_; }
  std::size_t tampered() const { return tampered_; }

  // One mutated copy of `wire`; always differs from the input.
  static Bytes mutate(const Bytes& wire, Rng& rng);

 private:
  Rng rng_;
  std::size_t tamper_hops_;
  std::size_t inject_per_hop_;
  std::size_t tampered_ = 0;
  std::size_t injected_ = 0;
  std::vector<Bytes> history_;
};

// Submits a holder claim for `claimer` at the context's tick. With
// forge_signature the claim carries a signature that does not verify.
protocol::ClaimVerdict inject_byzantine_claim(protocol::RoundContext& context,
                                              const crypto::CipherSuite& suite,
                                              ClientId claimer,
                                              bool forge_signature);

// ---- reporting ----

struct AttackReport {
  std::string scenario;
  std::string kind;
  bool success = false;
  std::int64_t deposits_moved = 0;
};

// Header: scenario,adversary_kind,success,deposits_moved
void write_attack_reports(std::ostream& out, const std::vector<AttackReport>& reports);

}  // namespace ppt::adversary

#endif  // PPT_ADVERSARY_HPP_
