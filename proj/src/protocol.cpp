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

#include "ppt/protocol.hpp"

#include <algorithm>
#include <deque>
#include <string_view>

#include "json.hpp"
#include "ppt/rng.hpp"

namespace ppt::protocol {
namespace {

constexpr std::uint64_t kSigningStream = 0x516E000000ull;
constexpr std::uint64_t kLeaderStream = 0x1EAD00ull;
constexpr std::uint64_t kNoiseStream = 0x4E015E00ull;
constexpr Tick kDetectionTicks = 2;

crypto::SymmetricKey upload_key(std::uint64_t seed, ClientId c) {
  ByteWriter w;
  w.bytes(as_bytes("ppt-upload-key"));
  w.u64(seed);
  w.u32(c);
  const Digest d = sha256(w.view());
  crypto::SymmetricKey k{};
  std::copy_n(d.begin(), k.size(), k.begin());
  return k;
}

}  // namespace

// ---- network ----

Network build_network(topology::Graph physical,
                      std::set<ClientId> server_adjacent,
                      const keying::EstablishmentConfig& keying,
                      const crypto::CipherSuite& suite,
                      keying::Execution execution) {
  const std::size_t n = physical.node_count();
  for (ClientId c : server_adjacent) {
    if (c >= n) throw ParameterError("server-adjacent client out of range");
  }
  Network net;
  net.keys = keying::establish_keys(physical, keying, suite, execution);
  net.physical = std::move(physical);
  net.server_adjacent = std::move(server_adjacent);
  net.keying_config = keying;
  net.signing.reserve(n);
  net.upload_keys.reserve(n);
  for (ClientId c = 0; c < n; ++c) {
    net.signing.push_back(
        suite.signing_keypair(derive_seed(keying.seed, kSigningStream + c)));
    net.upload_keys.push_back(upload_key(keying.seed, c));
  }
  return net;
}

Network build_network(const NetworkConfig& config,
                      const crypto::CipherSuite& suite,
                      keying::Execution execution) {
  if (config.server_adjacent == 0 || config.server_adjacent > config.n_potential) {
    throw ParameterError("server_adjacent must be in [1, n_potential]");
  }
  topology::Graph g = topology::generate_random_graph(
      config.n_potential, config.edge_probability, derive_seed(config.seed, 10));
  Rng rng(derive_seed(config.seed, 11));
  std::set<ClientId> adjacent;
  for (std::uint32_t c : rng.sample_distinct(
           static_cast<std::uint32_t>(config.n_potential),
           static_cast<std::uint32_t>(config.server_adjacent))) {
    adjacent.insert(c);
  }
  keying::EstablishmentConfig keying = config.keying;
  keying.seed = derive_seed(config.seed, 12);
  return build_network(std::move(g), std::move(adjacent), keying, suite, execution);
}

// ---- route decisions ----

std::size_t AggregationState::visited_count() const {
  return static_cast<std::size_t>(std::count(visited.begin(), visited.end(), true));
}

namespace {

bool has_open_neighbour(ClientId c, const AggregationState& s,
                        const topology::Graph& g) {
  for (ClientId nb : g.neighbors(c)) {
    if (nb < s.eligible.size() && s.open(nb)) return true;
  }
  return false;
}

}  // namespace

HopDecision next_hop(ClientId current, const AggregationState& state,
                     const topology::Graph& graph) {
  if (state.stack.empty() || state.stack.back() != current) {
    throw ParameterError("current client is not the top of the route stack");
  }
  using Kind = HopDecision::Kind;
  if (!state.forced_backtrack) {
    for (ClientId nb : graph.neighbors(current)) {
      if (nb < state.eligible.size() && state.open(nb)) return {Kind::kForward, nb};
    }
  }
  const std::size_t depth = state.stack.size();
  if (depth == 1) return {Kind::kDone, current};
  const ClientId parent = state.stack[depth - 2];
  if (state.shortcut_return) {
    ClientId target = state.stack.front();
    if (!state.forced_backtrack) {
      for (std::size_t i = depth - 1; i-- > 0;) {
        if (has_open_neighbour(state.stack[i], state, graph)) {
          target = state.stack[i];
          break;
        }
      }
    }
    if (target != parent && graph.has_edge(current, target)) {
      return {Kind::kBacktrack, target};
    }
  }
  return {Kind::kBacktrack, parent};
}

TerminationStatus enforce_termination(AggregationState& state, Tick elapsed,
                                      Tick deadline) {
  const Tick cutoff = (2 * deadline + 2) / 3;  // ceil(2T/3)
  if (elapsed >= cutoff) state.forced_backtrack = true;
  return elapsed > deadline ? TerminationStatus::kExpired
                            : TerminationStatus::kRunning;
}

bool admit_new_client(ClientId candidate, AggregationState& state,
                      std::size_t n_targets,
                      const keying::KeyDirectory& keys) {
  if (candidate >= state.eligible.size()) {
    throw ParameterError("joining client out of range");
  }
  if (!keys.has_any_link(candidate)) {
    throw KeyEstablishmentRequiredError("client " + std::to_string(candidate) +
                                        " has no communication key");
  }
  if (state.visited_count() >= (n_targets + 1) / 2) return false;
  state.eligible[candidate] = true;
  return true;
}

ClientId select_leader(const std::vector<ClientId>& targets,
                       const std::set<ClientId>& server_adjacent,
                       const std::set<ClientId>& history, std::uint64_t seed) {
  std::vector<ClientId> candidates;
  for (ClientId t : targets) {
    if (server_adjacent.count(t)) candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  if (candidates.empty()) {
    throw AbortRoundError("no target client is adjacent to the server");
  }
  std::vector<ClientId> preferred;
  for (ClientId c : candidates) {
    if (history.count(c)) preferred.push_back(c);
  }
  const auto& pool = preferred.empty() ? candidates : preferred;
  Rng rng(seed);
  return pool[rng.below(pool.size())];
}

std::optional<ClientId> Ledger::current_holder() const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->action == "start" || it->action == "receive" ||
        it->action == "rollback") {
      return it->actor;
    }
  }
  return std::nullopt;
}

const char* to_string(HopKind kind) {
  switch (kind) {
    case HopKind::kForward: return "forward";
    case HopKind::kBacktrack: return "backtrack";
    case HopKind::kRelay: return "relay";
  }
  return "?";
}

Bytes claim_message(ClientId claimer, Tick tick) {
  ByteWriter w;
  w.bytes(as_bytes("PPTCLAIM"));
  w.u32(claimer);
  w.u64(tick);
  return std::move(w).take();
}

HolderClaim sign_claim(const crypto::CipherSuite& suite, const Network& net,
                       ClientId claimer, Tick tick) {
  return HolderClaim{claimer, tick,
                     suite.sign(net.signing.at(claimer).secret_key,
                                claim_message(claimer, tick))};
}

std::string transcript_hash(const std::vector<std::string>& lines) {
  std::string joined;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) joined.push_back('\n');
    joined += lines[i];
  }
  return sha256_hex(as_bytes(joined));
}

model::ParameterVector apply_round(const RoundResult& result,
                                   const model::ParameterVector& global) {
  if (!result.completed || !result.aggregate) {
    throw AbortRoundError("round did not complete: " + result.abort_reason);
  }
  return model::global_update(*result.aggregate, global);
}

// ---- round engine ----

namespace {

struct Frame {
  ClientId id = 0;
  model::EncodedUpdate sent;  // running sum on this client's latest forward
  std::size_t visits = 0;     // visit_order size at that forward
};

class Engine final : public RoundContext {
 public:
  Engine(Network& net, const RoundConfig& cfg, const RoundInputs& inputs,
         const crypto::CipherSuite& suite, const RoundHooks& hooks)
      : net_(net), cfg_(cfg), inputs_(inputs), suite_(suite), hooks_(hooks),
        n_(net.size()), secure_(net.secure_graph()), clients_(n_),
        known_dead_(n_, false), admitted_(n_, false) {
    validate();
    for (ClientId c = 0; c < n_; ++c) clients_[c].id = c;
    for (ClientId t : cfg_.targets) clients_[t].role = Role::kTarget;
    dropouts_ = cfg_.dropouts;
    std::stable_sort(dropouts_.begin(), dropouts_.end(),
                     [](const DropoutEvent& a, const DropoutEvent& b) {
                       return a.tick < b.tick;
                     });
    for (const auto& d : dropouts_) {
      if (!clients_[d.client].dropout_tick) clients_[d.client].dropout_tick = d.tick;
    }
    joins_ = cfg_.joins;
    std::stable_sort(joins_.begin(), joins_.end(),
                     [](const JoinRequest& a, const JoinRequest& b) {
                       return a.tick < b.tick;
                     });
    deadline_ = cfg_.deadline ? cfg_.deadline : 4 * cfg_.targets.size();
  }

  RoundResult run() {
    apply_dropouts();
    for (std::size_t attempt = 0; attempt <= cfg_.leader_retries; ++attempt) {
      result_.attempts = attempt + 1;
      std::optional<ClientId> leader;
      try {
        leader = pick_leader(attempt);
      } catch (const AbortRoundError& e) {
        abort(e.what());
        break;
      }
      if (run_attempt(*leader, attempt)) break;
      if (result_.abort_reason != "leader-dropout") break;
    }
    result_.ticks = clock_;
    result_.transcript_hash = transcript_hash(result_.transcript);
    return std::move(result_);
  }

  // RoundContext
  Tick now() const override { return clock_; }
  ClientId holder() const override { return holder_; }
  const Ledger& ledger() const override { return result_.ledger; }
  const Network& network() const override { return net_; }
  const std::vector<ClientState>& clients() const override { return clients_; }

  ClaimVerdict submit_claim(const HolderClaim& claim,
                            const std::set<ClientId>& dishonest) override {
    ClaimVerdict v;
    if (claim.claimer < n_) {
      const Tick age = clock_ > claim.tick ? clock_ - claim.tick : claim.tick - clock_;
      v.signature_valid =
          age <= cfg_.freshness_window &&
          suite_.verify(net_.signing[claim.claimer].public_key,
                        claim_message(claim.claimer, claim.tick), claim.signature);
      const auto h = result_.ledger.current_holder();
      v.ledger_consistent = h && *h == claim.claimer;
      for (ClientId m : *reach_from(claim.claimer)) {
        if (m != claim.claimer && clients_[m].alive && !dishonest.count(m)) {
          v.evaluated_by.push_back(m);
        }
      }
    }
    const ClientId actor = claim.claimer < n_ ? claim.claimer : 0;
    if (v.accepted()) {
      ++result_.claims_accepted;
      broadcast(actor, "claim-accepted", actor);
    } else {
      ++result_.claims_rejected;
      broadcast(actor, "claim-rejected", actor);
    }
    log(actor, v.accepted() ? "claim-accepted" : "claim-rejected", std::nullopt,
        claim.signature);
    return v;
  }

 private:
  enum class Send { kDelivered, kDead, kAborted };

  void validate() const {
    if (cfg_.targets.empty()) throw ParameterError("round needs at least one target");
    if (inputs_.updates.empty()) throw ParameterError("no encoded updates supplied");
    const auto& first = inputs_.updates.begin()->second.packed;
    if (first.dim() < 2) throw ShapeError("encoded update needs dim + 1 >= 2 slots");
    for (const auto& [c, u] : inputs_.updates) {
      if (u.packed.dim() != first.dim() || !(u.packed.format() == first.format())) {
        throw ShapeError("encoded updates differ in shape");
      }
    }
    auto require = [&](ClientId c, const char* what) {
      if (c >= n_) throw ParameterError(std::string(what) + " out of range");
      if (!inputs_.updates.count(c)) {
        throw ParameterError(std::string(what) + " " + std::to_string(c) +
                             " has no encoded update");
      }
    };
    for (ClientId t : cfg_.targets) require(t, "target");
    for (const auto& j : cfg_.joins) require(j.client, "joining client");
    for (const auto& d : cfg_.dropouts) {
      if (d.client >= n_) throw ParameterError("dropout client out of range");
    }
    if (cfg_.forced_leader) require(*cfg_.forced_leader, "leader");
  }

  const model::EncodedUpdate& update_of(ClientId c) const {
    return inputs_.updates.at(c);
  }

  // ---- logging ----

  void log(ClientId actor, std::string_view action, std::optional<ClientId> peer,
           ByteView payload = {}) {
    nlohmann::json j;
    j["seq"] = result_.transcript.size();
    j["tick"] = clock_;
    j["actor"] = actor;
    j["action"] = action;
    if (peer) j["peer"] = *peer;
    j["payload_hash"] = payload.empty() ? std::string() : sha256_hex(payload);
    result_.transcript.push_back(j.dump());
  }

  void broadcast(ClientId actor, std::string action, ClientId subject) {
    result_.ledger.append(
        BroadcastRecord{actor, std::move(action), subject, clock_, reach_from(actor)});
  }

  // Live component of `c` in the physical graph, cached per liveness epoch.
  std::shared_ptr<const std::vector<ClientId>> reach_from(ClientId c) {
    if (component_.empty()) {
      component_.assign(n_, -1);
      members_.clear();
      for (ClientId s = 0; s < n_; ++s) {
        if (component_[s] != -1 || !clients_[s].alive) continue;
        auto members = std::make_shared<std::vector<ClientId>>();
        std::deque<ClientId> queue{s};
        component_[s] = static_cast<int>(members_.size());
        while (!queue.empty()) {
          const ClientId u = queue.front();
          queue.pop_front();
          members->push_back(u);
          for (ClientId v : net_.physical.neighbors(u)) {
            if (component_[v] == -1 && clients_[v].alive) {
              component_[v] = component_[s];
              queue.push_back(v);
            }
          }
        }
        std::sort(members->begin(), members->end());
        members_.push_back(std::move(members));
      }
    }
    if (component_[c] == -1) {
      return std::make_shared<const std::vector<ClientId>>(1, c);
    }
    return members_[component_[c]];
  }

  // ---- liveness ----

  void apply_dropouts() {
    while (next_dropout_ < dropouts_.size() &&
           dropouts_[next_dropout_].tick <= clock_) {
      const ClientId c = dropouts_[next_dropout_++].client;
      if (!clients_[c].alive) continue;
      clients_[c].alive = false;
      ++result_.dropouts;
      component_.clear();
      log(c, "dropout", std::nullopt);
    }
    // Neighbours notice a client's missing broadcasts kDetectionTicks after
    // it went offline.
    while (next_silence_ < next_dropout_ &&
           dropouts_[next_silence_].tick + kDetectionTicks <= clock_) {
      const ClientId c = dropouts_[next_silence_++].client;
      if (clients_[c].alive || known_dead_[c]) continue;
      ClientId by = c;
      for (ClientId nb : net_.physical.neighbors(c)) {
        if (clients_[nb].alive) {
          by = nb;
          break;
        }
      }
      detected(c, by);
    }
  }

  void advance(Tick ticks) {
    clock_ += ticks;
    apply_dropouts();
  }

  void detected(ClientId dead, ClientId by) {
    if (known_dead_[dead]) return;
    known_dead_[dead] = true;
    state_.excluded[dead] = true;
    ++result_.detected_dropouts;
    broadcast(by, "dropout-detected", dead);
    log(by, "dropout-detected", dead);
  }

  // ---- attempts ----

  ClientId pick_leader(std::size_t attempt) {
    if (attempt == 0 && cfg_.forced_leader) {
      const ClientId l = *cfg_.forced_leader;
      if (std::find(cfg_.targets.begin(), cfg_.targets.end(), l) == cfg_.targets.end()) {
        throw ParameterError("forced leader is not a target");
      }
      if (!clients_[l].alive) throw AbortRoundError("forced leader is offline");
      return l;
    }
    std::vector<ClientId> live;
    for (ClientId t : cfg_.targets) {
      if (clients_[t].alive) live.push_back(t);
    }
    return select_leader(live, net_.server_adjacent, cfg_.leader_history,
                         derive_seed(cfg_.seed, kLeaderStream + attempt));
  }

  void abort(std::string reason) {
    result_.completed = false;
    result_.abort_reason = std::move(reason);
    log(kServerId, "abort:" + result_.abort_reason, std::nullopt);
  }

  void reset_attempt(ClientId leader) {
    state_ = AggregationState(n_);
    state_.shortcut_return = cfg_.shortcut_return;
    for (ClientId t : cfg_.targets) state_.eligible[t] = true;
    for (ClientId c = 0; c < n_; ++c) {
      if (admitted_[c]) state_.eligible[c] = true;
      state_.excluded[c] = known_dead_[c];
      clients_[c].visited = false;
      clients_[c].aggregations = 0;
      if (clients_[c].role == Role::kLeader) clients_[c].role = Role::kTarget;
    }
    clients_[leader].role = Role::kLeader;
    frames_.clear();
    visit_order_.clear();
    pending_intent_.clear();
    return_target_.reset();
    last_sender_.reset();
    holder_ = leader;
  }

  void visit(ClientId c) {
    state_.visited[c] = true;
    clients_[c].visited = true;
    ++clients_[c].aggregations;
    visit_order_.push_back(c);
  }

  void push_frame(ClientId c) {
    frames_.push_back(Frame{c, {}, 0});
    state_.stack.push_back(c);
  }

  std::size_t frame_index(ClientId c) const {
    for (std::size_t i = frames_.size(); i-- > 0;) {
      if (frames_[i].id == c) return i;
    }
    throw Error("client not on the route stack");
  }

  void pop_to(std::size_t index) {
    frames_.resize(index + 1);
    state_.stack.resize(index + 1);
  }

  void process_joins() {
    while (next_join_ < joins_.size() && joins_[next_join_].tick <= clock_) {
      const ClientId c = joins_[next_join_++].client;
      if (state_.eligible[c]) continue;
      bool accepted = false;
      std::string why = "cutoff";
      if (!clients_[c].alive) {
        why = "offline";
      } else {
        try {
          accepted = admit_new_client(c, state_, cfg_.targets.size(), net_.keys);
        } catch (const KeyEstablishmentRequiredError&) {
          why = "key-establishment-required";
        }
      }
      if (accepted) {
        admitted_[c] = true;
        clients_[c].role = Role::kTarget;
        ++result_.accepted_joins;
        broadcast(c, "join-accepted", c);
        log(c, "join-accepted", std::nullopt);
      } else {
        ++result_.rejected_joins;
        broadcast(c, "join-rejected", c);
        log(c, "join-rejected:" + why, std::nullopt);
      }
    }
  }

  bool run_attempt(ClientId leader, std::size_t attempt) {
    reset_attempt(leader);
    result_.leader = leader;
    const Tick start = clock_;
    log(leader, "leader-selected", std::nullopt);

    const auto& own = update_of(leader);
    result_.noise = crypto::generate_noise(
        own.packed.dim(), cfg_.noise_generator,
        derive_seed(cfg_.seed, kNoiseStream + attempt), own.packed.format().width_bits);
    held_ = cfg_.masking ? model::apply_mask(own, result_.noise) : own;
    visit(leader);
    push_frame(leader);
    broadcast(leader, "start", leader);

    while (true) {
      if (!clients_[leader].alive) {
        abort("leader-dropout");
        return false;
      }
      if (enforce_termination(state_, clock_ - start, deadline_) ==
          TerminationStatus::kExpired) {
        abort("deadline");
        return false;
      }
      process_joins();

      if (!clients_[holder_].alive) {
        // Token lost. Noticed through the missing broadcast.
        advance(kDetectionTicks);
        if (!clients_[leader].alive) continue;
        recover_token(holder_);
        continue;
      }

      Send sent = Send::kDelivered;
      if (return_target_) {
        sent = step_return();
      } else {
        const HopDecision d = next_hop(holder_, state_, secure_);
        if (d.kind == HopDecision::Kind::kDone) break;
        if (d.kind == HopDecision::Kind::kForward) {
          frames_.back().sent = held_;
          frames_.back().visits = visit_order_.size();
          sent = transmit(holder_, d.to, HopKind::kForward);
          if (sent == Send::kDelivered) {
            held_.packed += update_of(d.to).packed;
            visit(d.to);
            push_frame(d.to);
            holder_ = d.to;
          }
        } else if (known_dead_[d.to]) {
          return_target_ = d.to;
        } else {
          const std::size_t target = frame_index(d.to);
          sent = transmit(holder_, d.to, HopKind::kBacktrack);
          if (sent == Send::kDelivered) {
            pop_to(target);
            holder_ = d.to;
          } else if (sent == Send::kDead) {
            return_target_ = d.to;
          }
        }
      }
      if (sent == Send::kAborted) return false;
      if (hooks_.after_hop) hooks_.after_hop(*this);
    }
    return finalize(leader);
  }

  // Deepest ancestor below the stack top that is not known to be offline.
  std::optional<std::size_t> live_ancestor_below(std::size_t index) const {
    for (std::size_t i = index; i-- > 0;) {
      if (!known_dead_[frames_[i].id]) return i;
    }
    return std::nullopt;
  }

  // Shortest detour through visited clients that are off the stack, so the
  // token never lands on a shallower ancestor and skips part of the return.
  std::vector<ClientId> relay_path(ClientId from, ClientId to) const {
    std::vector<bool> on_stack(n_, false);
    for (const Frame& f : frames_) on_stack[f.id] = true;
    std::vector<int> prev(n_, -2);
    std::deque<ClientId> queue{from};
    prev[from] = -1;
    while (!queue.empty()) {
      const ClientId u = queue.front();
      queue.pop_front();
      if (u == to) break;
      for (ClientId v : secure_.neighbors(u)) {
        if (prev[v] != -2 || known_dead_[v]) continue;
        if (v != to && (!state_.visited[v] || on_stack[v])) continue;
        prev[v] = static_cast<int>(u);
        queue.push_back(v);
      }
    }
    if (prev[to] == -2) return {};
    std::vector<ClientId> path;
    for (int v = static_cast<int>(to); v != -1; v = prev[v]) {
      path.push_back(static_cast<ClientId>(v));
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // One hop of a backtrack that has to route around an offline ancestor.
  Send step_return() {
    const std::size_t top = frames_.size() - 1;
    for (std::size_t i = 0; i < top; ++i) {
      if (frames_[i].id == holder_) {
        pop_to(i);
        return_target_.reset();
        return Send::kDelivered;
      }
    }
    std::optional<std::size_t> idx = live_ancestor_below(top);
    std::vector<ClientId> path;
    while (idx) {
      path = relay_path(holder_, frames_[*idx].id);
      if (!path.empty()) break;
      idx = live_ancestor_below(*idx);
    }
    if (!idx) {
      broadcast(holder_, "stranded", holder_);
      log(holder_, "stranded", std::nullopt);
      advance(kDetectionTicks);
      rollback(frames_.back().id);
      return Send::kDelivered;
    }
    const ClientId q = frames_[*idx].id;
    return_target_ = q;
    const ClientId next = path[1];
    const Send s = transmit(holder_, next, next == q ? HopKind::kBacktrack
                                                     : HopKind::kRelay);
    if (s == Send::kDelivered) {
      holder_ = next;
      if (next == q) {
        pop_to(*idx);
        return_target_.reset();
      }
    }
    return s;
  }

  // The client that last handed the token over still has the sum it sent.
  // After a forward that sum lacks the lost client's update, which is the
  // rollback case below. After a backtrack or relay it is complete, and the
  // sender carries it on towards the next live ancestor.
  void recover_token(ClientId lost) {
    if (last_sender_ && !last_was_forward_ && clients_[*last_sender_].alive) {
      const ClientId sender = *last_sender_;
      detected(lost, sender);
      holder_ = sender;
      held_ = last_sent_;
      return_target_ = lost;
      last_sender_.reset();
      broadcast(sender, "resend", lost);
      log(sender, "resend", lost);
      return;
    }
    rollback(lost);
  }

  // Resume from the deepest live ancestor strictly below the stack top.
  // Contributions made after that ancestor's last forward are discarded and
  // their owners become open again.
  void rollback(ClientId lost) {
    std::size_t j = frames_.size() - 1;
    while (j > 0) {
      --j;
      if (clients_[frames_[j].id].alive) break;
    }
    const Frame f = frames_[j];
    if (!clients_[lost].alive) detected(lost, f.id);
    for (std::size_t k = f.visits; k < visit_order_.size(); ++k) {
      const ClientId c = visit_order_[k];
      state_.visited[c] = false;
      clients_[c].visited = false;
      --clients_[c].aggregations;
    }
    visit_order_.resize(f.visits);
    pop_to(j);
    held_ = f.sent;
    holder_ = f.id;
    return_target_.reset();
    ++result_.rollbacks;
    broadcast(f.id, "rollback", lost);
    log(f.id, "rollback", lost);
  }

  // ---- transport ----

  Send transmit(ClientId from, ClientId to, HopKind kind) {
    const auto* link = net_.keys.find(from, to);
    if (!link) throw Error("route uses an unkeyed link");
    for (int attempt = 0; attempt < 2; ++attempt) {
      const Tick sent_at = clock_;
      broadcast(from, "intent", to);
      pending_intent_[{from, to}] = sent_at;
      const Bytes ct = suite_.seal(link->key, model::serialize(held_.packed));
      const crypto::SignedEnvelope env = crypto::sign_envelope(
          suite_, from, ct, sent_at, net_.signing[from].secret_key);
      const Bytes wire = crypto::encode_envelope(env);
      ++result_.transmissions;
      log(from, std::string("send-") + to_string(kind), to, wire);
      advance(1);
      if (!clients_[to].alive) {
        advance(kDetectionTicks - 1);
        detected(to, from);
        return Send::kDead;
      }
      const HopInfo info{from, to, sent_at, kind, attempt > 0};
      Interception ic;
      if (hooks_.intercept) ic = hooks_.intercept(info, wire);
      result_.observations.push_back(Observation{from, to, sent_at, kind, wire, held_});

      const auto accepted = receive(to, ic.replace ? *ic.replace : wire);
      for (const Bytes& extra : ic.inject) {
        if (receive(to, extra)) {
          ++result_.injected_accepted;
        } else {
          ++result_.injected_rejected;
        }
      }
      if (accepted) {
        result_.observations.back().accepted = true;
        if (!(*accepted == held_)) ++result_.injected_accepted;
        held_ = *accepted;
        last_sender_ = from;
        last_sent_ = held_;
        last_was_forward_ = kind == HopKind::kForward;
        result_.route.push_back(info);
        broadcast(to, "receive", from);
        log(to, "accept", from, model::serialize(accepted->packed));
        return Send::kDelivered;
      }
      ++result_.rejections;
      if (attempt == 0) ++result_.retries;
    }
    confirm_malicious(from, to, *link);
    return Send::kAborted;
  }

  // Recipient pipeline: parse, registered sender, announced intent,
  // signature, both timestamps, duplicate check, decryption, shape.
  std::optional<model::EncodedUpdate> receive(ClientId to, const Bytes& wire) {
    ClientId sender = 0;
    auto reject = [&](const char* why) -> std::optional<model::EncodedUpdate> {
      broadcast(to, "reject", sender);
      log(to, std::string("reject:") + why, sender, wire);
      return std::nullopt;
    };
    crypto::SignedEnvelope env;
    try {
      env = crypto::decode_envelope(wire);
    } catch (const DecodeError&) {
      return reject("decode");
    }
    sender = env.sender;
    if (sender >= n_) return reject("unknown-sender");
    const auto intent = pending_intent_.find({sender, to});
    if (intent == pending_intent_.end()) return reject("no-intent");
    const Tick tau = intent->second;
    if (clock_ - tau > cfg_.freshness_window) return reject("stale-intent");
    try {
      crypto::verify_envelope(suite_, env, net_.signing[sender].public_key, clock_,
                              cfg_.freshness_window);
    } catch (const ForgeryError&) {
      return reject("signature");
    } catch (const ReplayError&) {
      return reject("stale");
    }
    if (env.timestamp < tau) return reject("before-intent");
    const std::string sig = sha256_hex(env.signature);
    if (seen_signatures_.count(sig)) return reject("duplicate");
    const auto* link = net_.keys.find(sender, to);
    if (!link) return reject("no-key");
    Bytes plaintext;
    try {
      plaintext = suite_.open(link->key, env.ciphertext);
    } catch (const AuthenticationError&) {
      return reject("decrypt");
    }
    model::ParameterVector v;
    try {
      v = model::deserialize(plaintext);
    } catch (const DecodeError&) {
      return reject("payload");
    }
    if (v.dim() != held_.packed.dim() || !(v.format() == held_.packed.format())) {
      return reject("shape");
    }
    seen_signatures_.insert(sig);
    pending_intent_.erase(intent);
    return model::EncodedUpdate{std::move(v)};
  }

  void confirm_malicious(ClientId sender, ClientId recipient,
                         const keying::CommunicationKey& link) {
    result_.flagged.push_back(sender);
    broadcast(recipient, "flag-malicious", sender);
    log(recipient, "flag-malicious", sender);
    std::set<keying::KeyId> poisoned;
    for (const auto& [id, key] : link.material) poisoned.insert(id);
    result_.revocation = keying::revoke_keys(poisoned, net_.keys.rings,
                                             net_.keys.links, net_.keys.threshold);
    keying::establish_missing_links(net_.keys, net_.physical, net_.keying_config,
                                    suite_, result_.revocation.needs_path_key,
                                    {sender});
    broadcast(recipient, "revoke", sender);
    log(recipient, "revoke", sender);
    abort("malicious-holder");
  }

  bool finalize(ClientId leader) {
    std::vector<model::EncodedUpdate> parts;
    parts.reserve(visit_order_.size());
    for (ClientId c : visit_order_) parts.push_back(update_of(c));
    model::check_headroom(parts);

    const model::EncodedUpdate total =
        cfg_.masking ? model::remove_mask(held_, result_.noise) : held_;
    const Bytes ct =
        suite_.seal(net_.upload_keys[leader], model::serialize(total.packed));
    const crypto::SignedEnvelope env = crypto::sign_envelope(
        suite_, leader, ct, clock_, net_.signing[leader].secret_key);
    const Bytes wire = crypto::encode_envelope(env);
    log(leader, "upload", kServerId, wire);
    advance(1);

    // Server side.
    try {
      const crypto::SignedEnvelope got = crypto::decode_envelope(wire);
      if (got.sender != leader) throw ForgeryError("unexpected uploader");
      crypto::verify_envelope(suite_, got, net_.signing[leader].public_key, clock_,
                              cfg_.freshness_window);
      model::ParameterVector v =
          model::deserialize(suite_.open(net_.upload_keys[leader], got.ciphertext));
      if (v.dim() != held_.packed.dim()) throw DecodeError("aggregate shape");
      result_.aggregate = model::EncodedUpdate{std::move(v)};
    } catch (const Error& e) {
      abort(std::string("upload-rejected:") + e.what());
      return false;
    }
    result_.completed = true;
    result_.abort_reason.clear();
    result_.contributors = visit_order_;
    broadcast(leader, "done", leader);
    log(kServerId, "aggregate-accepted", leader,
        model::serialize(result_.aggregate->packed));
    return true;
  }

  Network& net_;
  const RoundConfig& cfg_;
  const RoundInputs& inputs_;
  const crypto::CipherSuite& suite_;
  const RoundHooks& hooks_;
  const std::size_t n_;
  topology::Graph secure_;

  std::vector<ClientState> clients_;
  std::vector<bool> known_dead_;
  std::size_t next_silence_ = 0;
  std::optional<ClientId> last_sender_;
  model::EncodedUpdate last_sent_;
  bool last_was_forward_ = false;
  std::vector<bool> admitted_;
  std::vector<DropoutEvent> dropouts_;
  std::size_t next_dropout_ = 0;
  std::vector<JoinRequest> joins_;
  std::size_t next_join_ = 0;
  Tick deadline_ = 0;
  Tick clock_ = 0;

  AggregationState state_;
  std::vector<Frame> frames_;
  std::vector<ClientId> visit_order_;
  model::EncodedUpdate held_;
  ClientId holder_ = 0;
  std::optional<ClientId> return_target_;

  std::map<std::pair<ClientId, ClientId>, Tick> pending_intent_;
  std::set<std::string> seen_signatures_;
  std::vector<int> component_;
  std::vector<std::shared_ptr<const std::vector<ClientId>>> members_;

  RoundResult result_;
};

}  // namespace

RoundResult run_round(Network& net, const RoundConfig& config,
                      const RoundInputs& inputs, const crypto::CipherSuite& suite,
                      const RoundHooks& hooks) {
  Engine engine(net, config, inputs, suite, hooks);
  return engine.run();
}

}  // namespace ppt::protocol
