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

// Round simulator for masked depth-first aggregation over a peer graph.
//
// The leader adds a noise vector to its own encoded update and hands the
// running sum along a depth-first route over keyed links between target
// clients. Every hop is announced on the neighbourhood ledger, encrypted
// under the pairwise communication key, signed and timestamped. When the
// route is exhausted the leader removes the noise and uploads the aggregate
// to the server. Time advances in ticks: one per hop.

#ifndef PPT_PROTOCOL_HPP_
#define PPT_PROTOCOL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ppt/common.hpp"
#include "ppt/crypto.hpp"
#include "ppt/keying.hpp"
#include "ppt/model.hpp"
#include "ppt/topology.hpp"

namespace ppt::protocol {

// ---- network ----

struct Network {
  topology::Graph physical;
  keying::KeyDirectory keys;
  std::vector<crypto::SigningKeyPair> signing;  // indexed by client id
  std::vector<crypto::SymmetricKey> upload_keys;  // client -> server
  std::set<ClientId> server_adjacent;
  keying::EstablishmentConfig keying_config;  // reused when re-keying

  std::size_t size() const { return physical.node_count(); }
  // Links that currently carry a communication key.
  topology::Graph secure_graph() const { return keys.secure_graph(size()); }
};

struct NetworkConfig {
  std::size_t n_potential = 200;
  double edge_probability = 0.182;
  std::size_t server_adjacent = 10;
  keying::EstablishmentConfig keying;
  std::uint64_t seed = 1;
};

// Samples G(n, p), picks the server-adjacent clients uniformly, runs key
// establishment and provisions signing and upload keys. keying.seed is
// replaced by a seed derived from `seed`.
Network build_network(const NetworkConfig& config,
                      const crypto::CipherSuite& suite,
                      keying::Execution execution = keying::Execution::kParallel);

// Same, for a caller-supplied physical graph.
Network build_network(topology::Graph physical,
                      std::set<ClientId> server_adjacent,
                      const keying::EstablishmentConfig& keying,
                      const crypto::CipherSuite& suite,
                      keying::Execution execution = keying::Execution::kParallel);

// ---- per-client and route state ----

enum class Role { kPotential, kTarget, kLeader };

struct ClientState {
  ClientId id = 0;
  Role role = Role::kPotential;
  bool alive = true;
  bool visited = false;
  std::optional<Tick> dropout_tick;
  // Net number of times this client's update sits in the running sum.
  int aggregations = 0;
};

struct AggregationState {
  std::vector<ClientId> stack;  // route from the leader to the current holder
  std::vector<bool> eligible;   // targets and admitted joiners
  std::vector<bool> visited;
  std::vector<bool> excluded;   // detected dropouts
  bool forced_backtrack = false;
  bool shortcut_return = false;

  explicit AggregationState(std::size_t n = 0)
      : eligible(n, false), visited(n, false), excluded(n, false) {}
  std::size_t visited_count() const;
  bool open(ClientId c) const {
    return eligible[c] && !visited[c] && !excluded[c];
  }
};

struct HopDecision {
  enum class Kind { kForward, kBacktrack, kDone };
  Kind kind = Kind::kDone;
  ClientId to = 0;

  friend bool operator==(const HopDecision&, const HopDecision&) = default;
};

// Lowest-id open neighbour of `current` in `graph`, else a backtrack to the
// previous stack entry, else done at the leader. With forced_backtrack set no
// forward hop is returned. In shortcut mode a backtrack may target the
// deepest ancestor that still has open neighbours (or the leader) when it is
// adjacent to `current`. Throws ParameterError unless current is the top of
// the stack.
HopDecision next_hop(ClientId current, const AggregationState& state,
                     const topology::Graph& graph);

enum class TerminationStatus { kRunning, kExpired };

// `elapsed` is ticks since the attempt started. Sets forced_backtrack once
// elapsed >= ceil(2T/3); kExpired once elapsed > T.
TerminationStatus enforce_termination(AggregationState& state, Tick elapsed,
                                      Tick deadline);

// Accepts `candidate` into the eligible set unless visited_count already
// reached ceil(n_targets / 2) (returns false). Throws
// KeyEstablishmentRequiredError when the candidate has no communication key.
bool admit_new_client(ClientId candidate, AggregationState& state,
                      std::size_t n_targets,
                      const keying::KeyDirectory& keys);

// Uniform member of history ∩ (targets ∩ server_adjacent) when non-empty,
// else of the candidate set. Throws AbortRoundError when there is no
// candidate.
ClientId select_leader(const std::vector<ClientId>& targets,
                       const std::set<ClientId>& server_adjacent,
                       const std::set<ClientId>& history, std::uint64_t seed);

// ---- neighbourhood ledger ----

struct BroadcastRecord {
  ClientId actor = 0;
  std::string action;
  ClientId subject = 0;  // counterpart of the action, if any
  Tick tau = 0;
  // Clients the record reached: actor's component of the live physical
  // graph at the time of the broadcast. Shared between records of the same
  // liveness epoch.
  std::shared_ptr<const std::vector<ClientId>> propagation;
};

class Ledger {
 public:
  void append(BroadcastRecord record) { records_.push_back(std::move(record)); }
  const std::vector<BroadcastRecord>& records() const { return records_; }
  // Actor of the latest start / receive / rollback record.
  std::optional<ClientId> current_holder() const;

 private:
  std::vector<BroadcastRecord> records_;
};

// ---- round execution ----

enum class HopKind { kForward, kBacktrack, kRelay };
const char* to_string(HopKind kind);

struct DropoutEvent {
  ClientId client = 0;
  Tick tick = 0;
};

struct JoinRequest {
  ClientId client = 0;
  Tick tick = 0;
};

struct RoundConfig {
  std::uint64_t round = 0;
  std::uint64_t seed = 1;
  std::vector<ClientId> targets;
  std::set<ClientId> leader_history;
  Tick deadline = 0;  // 0 -> 4 * |targets|
  Tick freshness_window = 10;
  unsigned noise_generator = 0;
  bool masking = true;
  bool shortcut_return = false;
  std::vector<DropoutEvent> dropouts;
  std::vector<JoinRequest> joins;
  std::size_t leader_retries = 3;
  std::optional<ClientId> forced_leader;  // skips select_leader when set
};

// Encoded updates for every target and every client that may join.
struct RoundInputs {
  std::map<ClientId, model::EncodedUpdate> updates;
};

struct HopInfo {
  ClientId from = 0;
  ClientId to = 0;
  Tick tick = 0;
  HopKind kind = HopKind::kForward;
  bool retry = false;
};

// What an in-transit adversary does to one legitimate transmission. Injected
// wires reach the recipient after the (possibly replaced) legitimate one.
struct Interception {
  std::optional<Bytes> replace;
  std::vector<Bytes> inject;
};

struct Observation {
  ClientId from = 0;
  ClientId to = 0;
  Tick tick = 0;
  HopKind kind = HopKind::kForward;
  Bytes wire;  // as sent by `from`
  model::EncodedUpdate plaintext;  // ground truth, for analysis only
  bool accepted = false;  // the recipient took this transmission
};

struct HolderClaim {
  ClientId claimer = 0;
  Tick tick = 0;
  Bytes signature;
};

Bytes claim_message(ClientId claimer, Tick tick);
HolderClaim sign_claim(const crypto::CipherSuite& suite, const Network& net,
                       ClientId claimer, Tick tick);

struct ClaimVerdict {
  bool signature_valid = false;
  bool ledger_consistent = false;
  bool accepted() const { return signature_valid && ledger_consistent; }
  std::vector<ClientId> evaluated_by;  // honest clients the claim reached
};

class RoundContext;

struct RoundHooks {
  std::function<Interception(const HopInfo&, const Bytes& wire)> intercept;
  std::function<void(RoundContext&)> after_hop;
};

struct RoundResult {
  bool completed = false;
  std::string abort_reason;
  ClientId leader = 0;
  std::size_t attempts = 0;
  std::optional<model::EncodedUpdate> aggregate;  // unmasked, server side
  std::vector<ClientId> contributors;  // route order
  crypto::NoiseVector noise;           // of the last attempt

  std::size_t transmissions = 0;  // peer one-hop sends, retries included
  Tick ticks = 0;
  std::size_t rejections = 0;     // legitimate deliveries that failed checks
  std::size_t retries = 0;
  std::size_t injected_rejected = 0;
  std::size_t injected_accepted = 0;
  std::size_t dropouts = 0;       // scheduled dropouts that took effect
  std::size_t detected_dropouts = 0;
  std::size_t rollbacks = 0;
  std::size_t accepted_joins = 0;
  std::size_t rejected_joins = 0;
  std::vector<ClientId> flagged;  // confirmed malicious senders
  keying::RevocationResult revocation;
  std::size_t claims_accepted = 0;
  std::size_t claims_rejected = 0;

  std::vector<HopInfo> route;  // delivered hops
  std::vector<Observation> observations;
  Ledger ledger;
  std::vector<std::string> transcript;  // JSON lines
  std::string transcript_hash;
};

// Runs one round, retrying with a new leader after a leader dropout. Applies
// key revocation to `net` when a sender is confirmed malicious.
RoundResult run_round(Network& net, const RoundConfig& config,
                      const RoundInputs& inputs,
                      const crypto::CipherSuite& suite,
                      const RoundHooks& hooks = {});

// M_next from a completed round; throws AbortRoundError if the round did not
// complete and DegenerateRoundError for zero total weight.
model::ParameterVector apply_round(const RoundResult& result,
                                   const model::ParameterVector& global);

// Read access and claim submission for hooks running mid-round.
class RoundContext {
 public:
  virtual ~RoundContext() = default;
  virtual Tick now() const = 0;
  virtual ClientId holder() const = 0;
  virtual const Ledger& ledger() const = 0;
  virtual const Network& network() const = 0;
  virtual const std::vector<ClientState>& clients() const = 0;
  // Every live client in the claim's propagation set other than the claimer
  // and `dishonest` checks the signature and the ledger's current holder.
  virtual ClaimVerdict submit_claim(const HolderClaim& claim,
                                    const std::set<ClientId>& dishonest) = 0;
};

// SHA-256 over the transcript lines joined with '\n'.
std::string transcript_hash(const std::vector<std::string>& lines);

}  // namespace ppt::protocol

#endif  // PPT_PROTOCOL_HPP_
