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

#include "ppt/adversary.hpp"

#include <algorithm>
#include <ostream>

namespace ppt::adversary {

const char* to_string(Strategy s) {
  return s == Strategy::kCollude ? "collude" : "counter";
}

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kCurious: return "curious";
    case Kind::kForger: return "forger";
    case Kind::kByzantineClaimer: return "byzantine-claimer";
    case Kind::kColluderPair: return "colluder-pair";
  }
  return "?";
}

// ---- game ----

PayoffMatrix PayoffMatrix::from_gain_and_deposit(double gain, double deposit) {
  PayoffMatrix m;
  m.set(Strategy::kCollude, Strategy::kCollude, {gain, gain});
  m.set(Strategy::kCollude, Strategy::kCounter, {-deposit, deposit});
  m.set(Strategy::kCounter, Strategy::kCollude, {deposit, -deposit});
  m.set(Strategy::kCounter, Strategy::kCounter, {0, 0});
  return m;
}

namespace {
Strategy other(Strategy s) {
  return s == Strategy::kCollude ? Strategy::kCounter : Strategy::kCollude;
}
}  // namespace

std::vector<Equilibrium> pure_nash_equilibria(const PayoffMatrix& m) {
  std::vector<Equilibrium> out;
  for (Strategy b : {Strategy::kCollude, Strategy::kCounter}) {
    for (Strategy c : {Strategy::kCollude, Strategy::kCounter}) {
      const Payoff here = m.at(b, c);
      const double b_dev = m.at(other(b), c).b - here.b;
      const double c_dev = m.at(b, other(c)).c - here.c;
      if (b_dev > 0 || c_dev > 0) continue;
      out.push_back({b, c, b_dev == 0 || c_dev == 0});
    }
  }
  return out;
}

Strategy rational_strategy(const AdversaryProfile& profile, bool deposits_enabled) {
  if (!deposits_enabled) return Strategy::kCollude;
  return profile.gain > profile.deposit ? Strategy::kCollude : Strategy::kCounter;
}

std::int64_t DepositLedger::balance(ClientId client) const {
  const auto it = balances_.find(client);
  return it == balances_.end() ? 0 : it->second;
}

Settlement DepositLedger::resolve(const std::vector<Report>& reports) {
  Settlement s;
  std::vector<bool> done(reports.size(), false);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (done[i]) continue;
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      if (!done[j] && reports[j].reporter == reports[i].accused &&
          reports[j].accused == reports[i].reporter) {
        done[i] = done[j] = true;
        for (ClientId who : {reports[i].reporter, reports[i].accused}) {
          const std::int64_t taken = std::min(deposit_, balances_[who]);
          balances_[who] -= taken;
          confiscated_ += taken;
          s.confiscated += taken;
        }
        break;
      }
    }
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (done[i]) continue;
    const Report& r = reports[i];
    if (!r.evidence) {
      ++s.rejected_reports;
      continue;
    }
    const std::int64_t taken = std::min(deposit_, balances_[r.accused]);
    balances_[r.accused] -= taken;
    balances_[r.reporter] += taken;
    s.transferred += taken;
  }
  return s;
}

// ---- observers ----

namespace {

void add_unique(std::vector<model::EncodedUpdate>& set, model::EncodedUpdate v) {
  if (std::find(set.begin(), set.end(), v) == set.end()) set.push_back(std::move(v));
}

std::optional<crypto::SymmetricKey> observer_key(const protocol::Network& net,
                                                 ClientId observer, ClientId from,
                                                 ClientId to) {
  const keying::CommunicationKey* link = net.keys.find(from, to);
  if (!link) return std::nullopt;
  if (observer == from || observer == to) return link->key;
  // Third parties rebuild the key from their own ring when every shared key
  // is on it.
  const keying::KeyRing& ring = net.keys.rings.at(observer);
  crypto::SymmetricKey k{};
  if (link->material.empty()) return std::nullopt;
  for (const auto& [id, unused] : link->material) {
    auto it = std::lower_bound(
        ring.entries.begin(), ring.entries.end(), id,
        [](const auto& entry, keying::KeyId v) { return entry.first < v; });
    if (it == ring.entries.end() || it->first != id) return std::nullopt;
    k = crypto::xor_keys(k, it->second);
  }
  return k;
}

}  // namespace

AuditResult curious_observer_audit(const protocol::RoundResult& round,
                                   const protocol::Network& net,
                                   const crypto::CipherSuite& suite,
                                   std::optional<ClientId> observer,
                                   const protocol::RoundInputs& truth) {
  AuditResult out;
  if (!observer) return out;
  const ClientId o = *observer;
  for (const protocol::Observation& obs : round.observations) {
    const auto key = observer_key(net, o, obs.from, obs.to);
    if (!key) continue;
    try {
      const crypto::SignedEnvelope env = crypto::decode_envelope(obs.wire);
      add_unique(out.derivable,
                 model::EncodedUpdate{model::deserialize(suite.open(*key, env.ciphertext))});
    } catch (const Error&) {
      // key material does not open this payload
    }
  }
  if (o == round.leader && round.completed && round.aggregate) {
    if (!round.noise.values.empty()) {
      add_unique(out.derivable, model::EncodedUpdate{model::ParameterVector(
                                    round.aggregate->packed.format(), round.noise.values)});
    }
    add_unique(out.derivable, *round.aggregate);
  }
  for (const auto& [client, x] : truth.updates) {
    if (client == o) continue;
    if (std::find(out.derivable.begin(), out.derivable.end(), x) != out.derivable.end()) {
      out.leaked.push_back(client);
    }
  }
  return out;
}

std::vector<DifferentialExposure> differential_exposures(
    const protocol::RoundResult& round, const protocol::RoundInputs& truth) {
  std::vector<DifferentialExposure> out;
  std::map<ClientId, std::vector<const protocol::Observation*>> by_client;
  for (const auto& obs : round.observations) {
    if (!obs.accepted) continue;
    by_client[obs.from].push_back(&obs);
    by_client[obs.to].push_back(&obs);
  }
  for (const auto& [u, seen] : by_client) {
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i]->from != u) continue;
      for (std::size_t j = i + 1; j < seen.size(); ++j) {
        if (seen[j]->to != u) continue;
        const model::EncodedUpdate diff{seen[j]->plaintext.packed - seen[i]->plaintext.packed};
        for (const auto& [client, x] : truth.updates) {
          if (client != u && x == diff) out.push_back({u, client});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::pair(a.observer, a.exposed) < std::pair(b.observer, b.exposed);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& a, const auto& b) {
                          return a.observer == b.observer && a.exposed == b.exposed;
                        }),
            out.end());
  return out;
}

// ---- collusion ----

namespace {

std::vector<const protocol::Observation*> delivered(const protocol::RoundResult& round) {
  std::vector<const protocol::Observation*> out;
  for (const auto& obs : round.observations) {
    if (obs.accepted) out.push_back(&obs);
  }
  return out;
}

}  // namespace

std::optional<CollusionSetup> find_collusion_position(
    const protocol::RoundResult& round) {
  const auto hops = delivered(round);
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    if (hops[i]->kind == protocol::HopKind::kForward &&
        hops[i + 1]->kind == protocol::HopKind::kForward &&
        hops[i]->to == hops[i + 1]->from) {
      CollusionSetup s;
      s.b = hops[i]->from;
      s.victim = hops[i]->to;
      s.c = hops[i + 1]->to;
      return s;
    }
  }
  return std::nullopt;
}

AttackOutcome execute_collusion(const CollusionSetup& setup,
                                const protocol::RoundResult& round,
                                const protocol::RoundInputs& truth,
                                DepositLedger* deposits) {
  const auto hops = delivered(round);
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    if (hops[i]->kind == protocol::HopKind::kForward &&
        hops[i + 1]->kind == protocol::HopKind::kForward &&
        hops[i]->from == setup.b && hops[i]->to == setup.victim &&
        hops[i + 1]->from == setup.victim && hops[i + 1]->to == setup.c) {
      at = i;
      break;
    }
  }
  if (!at) {
    throw AttackInfeasibleError("colluders are not directly around the victim");
  }
  AttackOutcome out;
  out.victim = setup.victim;
  const bool b_colludes = setup.b_strategy == Strategy::kCollude;
  const bool c_colludes = setup.c_strategy == Strategy::kCollude;
  if (b_colludes && c_colludes) {
    // B hands C the sum it sent; C subtracts it from what the victim passed on.
    out.recovered = model::EncodedUpdate{hops[*at + 1]->plaintext.packed -
                                         hops[*at]->plaintext.packed};
    out.success = *out.recovered == truth.updates.at(setup.victim);
    return out;
  }
  out.detected = b_colludes || c_colludes;
  std::vector<Report> reports;
  if (b_colludes && !c_colludes) reports.push_back({setup.c, setup.b, true});
  if (!b_colludes && c_colludes) reports.push_back({setup.b, setup.c, true});
  if (deposits) out.settlement = deposits->resolve(reports);
  return out;
}

// ---- active ----

EnvelopeAttacker::EnvelopeAttacker(std::uint64_t seed, std::size_t tamper_hops,
                                   std::size_t inject_per_hop)
    : rng_(seed), tamper_hops_(tamper_hops), inject_per_hop_(inject_per_hop) {}

Bytes EnvelopeAttacker::mutate(const Bytes& wire, Rng& rng) {
  Bytes out = wire;
  switch (rng.below(5)) {
    case 0:
      if (!out.empty()) {
        out[rng.below(out.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
      }
      break;
    case 1:
      if (!out.empty()) out.resize(rng.below(out.size()));
      break;
    case 2:
      out.push_back(static_cast<std::uint8_t>(rng.below(256)));
      break;
    case 3:
    case 4:
      try {
        crypto::SignedEnvelope env = crypto::decode_envelope(wire);
        if (rng.below(2) == 0) {
          env.timestamp += 1 + rng.below(3);  // signature no longer covers it
        } else {
          env.sender ^= 1u + static_cast<ClientId>(rng.below(7));
        }
        out = crypto::encode_envelope(env);
      } catch (const DecodeError&) {
        out.push_back(0);
      }
      break;
  }
  if (out == wire) out.push_back(0x5A);
  return out;
}

protocol::Interception EnvelopeAttacker::operator()(const protocol::HopInfo& hop,
                                                    const Bytes& wire) {
  protocol::Interception ic;
  if (!hop.retry && tampered_ < tamper_hops_) {
    ic.replace = mutate(wire, rng_);
    ++tampered_;
  }
  for (std::size_t k = 0; k < inject_per_hop_; ++k) {
    if (!history_.empty() && rng_.bernoulli(0.5)) {
      ic.inject.push_back(history_[rng_.below(history_.size())]);
    } else {
      ic.inject.push_back(mutate(wire, rng_));
    }
    ++injected_;
  }
  history_.push_back(wire);
  return ic;
}

protocol::ClaimVerdict inject_byzantine_claim(protocol::RoundContext& context,
                                              const crypto::CipherSuite& suite,
                                              ClientId claimer,
                                              bool forge_signature) {
  protocol::HolderClaim claim =
      protocol::sign_claim(suite, context.network(), claimer, context.now());
  if (forge_signature) {
    if (claim.signature.empty()) {
      claim.signature.push_back(1);
    } else {
      claim.signature[0] ^= 0x01;
    }
  }
  return context.submit_claim(claim, {claimer});
}

void write_attack_reports(std::ostream& out, const std::vector<AttackReport>& reports) {
  out << "scenario,adversary_kind,success,deposits_moved\n";
  for (const auto& r : reports) {
    out << r.scenario << ',' << r.kind << ',' << (r.success ? 1 : 0) << ','
        << r.deposits_moved << '\n';
  }
}

}  // namespace ppt::adversary
