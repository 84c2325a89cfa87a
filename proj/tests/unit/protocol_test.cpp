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

#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "ppt/adversary.hpp"
#include "ppt/protocol.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace ppt::protocol {
namespace {

const crypto::LightweightSuite kLight;
const crypto::AesGcmEd25519Suite kAes;

using Kind = HopDecision::Kind;

std::vector<HopKind> kinds(const RoundResult& r) {
  std::vector<HopKind> out;
  for (const auto& h : r.route) out.push_back(h.kind);
  return out;
}

// ---- leader selection ----

TEST(SelectLeader, Examples) {
  EXPECT_EQ(select_leader({4, 5, 6}, {5}, {}, 1), 5u);
  EXPECT_THROW(select_leader({1, 2}, {3}, {}, 1), AbortRoundError);
  EXPECT_THROW(select_leader({}, {3}, {}, 1), AbortRoundError);
}

TEST(SelectLeader, PrefersHistory) {
  const std::vector<ClientId> targets{1, 2, 3, 4, 5, 6};
  const std::set<ClientId> adjacent{2, 3, 4, 5};
  std::map<ClientId, int> counts;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    ++counts[select_leader(targets, adjacent, {3, 5, 6}, s)];
  }
  EXPECT_EQ(counts[2] + counts[4], 0);
  EXPECT_GT(counts[3], 400);
  EXPECT_GT(counts[5], 400);
  EXPECT_EQ(counts[6], 0);  // not server-adjacent

  std::map<ClientId, int> fresh;
  for (std::uint64_t s = 0; s < 1000; ++s) ++fresh[select_leader(targets, adjacent, {}, s)];
  for (ClientId c : adjacent) EXPECT_GT(fresh[c], 180) << c;
}

// ---- next_hop ----

TEST(NextHop, PathGraphSequence) {
  const topology::Graph g = gen::path_graph(3);
  AggregationState s(3);
  s.eligible.assign(3, true);
  s.stack = {0};
  s.visited[0] = true;
  EXPECT_EQ(next_hop(0, s, g), (HopDecision{Kind::kForward, 1}));
  s.stack.push_back(1);
  s.visited[1] = true;
  EXPECT_EQ(next_hop(1, s, g), (HopDecision{Kind::kForward, 2}));
  s.stack.push_back(2);
  s.visited[2] = true;
  EXPECT_EQ(next_hop(2, s, g), (HopDecision{Kind::kBacktrack, 1}));
  s.stack.pop_back();
  EXPECT_EQ(next_hop(1, s, g), (HopDecision{Kind::kBacktrack, 0}));
  s.stack.pop_back();
  EXPECT_EQ(next_hop(0, s, g).kind, Kind::kDone);
  EXPECT_THROW(next_hop(2, s, g), ParameterError);
}

TEST(NextHop, LowestOpenNeighbourAndForcedBacktrack) {
  const topology::Graph g = gen::complete_graph(5);
  AggregationState s(5);
  s.eligible = {true, true, false, true, true};
  s.excluded[1] = true;
  s.stack = {4};
  s.visited[4] = true;
  EXPECT_EQ(next_hop(4, s, g), (HopDecision{Kind::kForward, 0}));
  s.stack = {0, 4};
  s.visited[0] = true;
  EXPECT_EQ(next_hop(4, s, g), (HopDecision{Kind::kForward, 3}));
  s.forced_backtrack = true;
  EXPECT_EQ(next_hop(4, s, g), (HopDecision{Kind::kBacktrack, 0}));
}

TEST(NextHop, ShortcutReturnsToAdjacentAncestor) {
  // 0-1-2-3 path plus chord 3-0
  topology::Graph g = gen::path_graph(4);
  g.add_edge(0, 3);
  AggregationState s(4);
  s.eligible.assign(4, true);
  s.visited.assign(4, true);
  s.stack = {0, 1, 2, 3};
  EXPECT_EQ(next_hop(3, s, g), (HopDecision{Kind::kBacktrack, 2}));
  s.shortcut_return = true;
  EXPECT_EQ(next_hop(3, s, g), (HopDecision{Kind::kBacktrack, 0}));
}

// ---- termination ----

TEST(Termination, ForcedBacktrackAndExpiry) {
  AggregationState s(1);
  EXPECT_EQ(enforce_termination(s, 49, 75), TerminationStatus::kRunning);
  EXPECT_FALSE(s.forced_backtrack);
  EXPECT_EQ(enforce_termination(s, 50, 75), TerminationStatus::kRunning);
  EXPECT_TRUE(s.forced_backtrack);
  EXPECT_EQ(enforce_termination(s, 75, 75), TerminationStatus::kRunning);
  EXPECT_EQ(enforce_termination(s, 76, 75), TerminationStatus::kExpired);
}

TEST(Termination, JoinCutoff) {
  Network net = fixture::network(gen::complete_graph(101), {0}, kLight);
  auto with_visited = [](std::size_t k) {
    AggregationState s(101);
    for (std::size_t i = 0; i < k; ++i) s.visited[i] = true;
    return s;
  };
  AggregationState at10 = with_visited(10);
  EXPECT_TRUE(admit_new_client(100, at10, 100, net.keys));
  EXPECT_TRUE(at10.eligible[100]);
  AggregationState at50 = with_visited(50);
  EXPECT_FALSE(admit_new_client(100, at50, 100, net.keys));
  AggregationState at51 = with_visited(51);
  EXPECT_FALSE(admit_new_client(100, at51, 100, net.keys));
  AggregationState at49 = with_visited(49);
  EXPECT_TRUE(admit_new_client(100, at49, 100, net.keys));

  topology::Graph g = gen::complete_graph(4);
  g.remove_edge(0, 3);
  g.remove_edge(1, 3);
  g.remove_edge(2, 3);
  Network lonely = fixture::network(g, {0}, kLight);
  AggregationState s(4);
  EXPECT_THROW(admit_new_client(3, s, 3, lonely.keys), KeyEstablishmentRequiredError);
}

// ---- rounds ----

TEST(Round, PathOfThreeSumsExactly) {
  Network net = fixture::network(gen::path_graph(3), {0}, kAes);
  const RoundInputs in = fixture::inputs(3, 4, 7);
  const RoundResult r = run_round(net, fixture::round({0, 1, 2}, 0), in, kAes);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_EQ(r.transmissions, 4u);
  EXPECT_EQ(kinds(r), (std::vector<HopKind>{HopKind::kForward, HopKind::kForward,
                                            HopKind::kBacktrack, HopKind::kBacktrack}));
  EXPECT_EQ(r.contributors, (std::vector<ClientId>{0, 1, 2}));
  const std::vector<model::EncodedUpdate> all{in.updates.at(0), in.updates.at(1),
                                              in.updates.at(2)};
  const auto want = oracle::modular_sum(all);
  EXPECT_EQ(std::vector<std::uint64_t>(r.aggregate->packed.raw().begin(),
                                       r.aggregate->packed.raw().end()),
            want);
}

TEST(Round, StarCostsSixTransmissions) {
  Network net = fixture::network(fixture::star(3), {0}, kLight);
  const RoundInputs in = fixture::inputs(4, 3, 8);
  const RoundResult r = run_round(net, fixture::round({0, 1, 2, 3}, 0), in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.transmissions, 6u);
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, {0, 1, 2, 3}));
}

TEST(Round, LeaderOnly) {
  Network net = fixture::network(gen::path_graph(2), {0}, kLight);
  const RoundInputs in = fixture::inputs(2, 4, 9);
  const RoundResult r = run_round(net, fixture::round({0}, 0), in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.transmissions, 0u);
  EXPECT_EQ(*r.aggregate, in.updates.at(0));
  // Integer weight: (w x) / w = x exactly.
  const auto M = model::ParameterVector::zeros(4);
  const auto next = apply_round(r, M);
  const auto decoded = model::decode(in.updates.at(0));
  const auto w = static_cast<std::int64_t>(decoded.weight());
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(next.signed_at(j) * w, decoded.weighted.signed_at(j));
  }
}

TEST(Round, ZeroWeightIsDegenerate) {
  Network net = fixture::network(gen::path_graph(2), {0}, kLight);
  RoundInputs in;
  in.updates.emplace(0, model::encode(model::ParameterVector::zeros(2), 0));
  in.updates.emplace(1, model::encode(model::ParameterVector::zeros(2), 0));
  const RoundResult r = run_round(net, fixture::round({0, 1}, 0), in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_THROW(apply_round(r, model::ParameterVector::zeros(2)), DegenerateRoundError);
}

TEST(Round, NoServerAdjacentTargetAborts) {
  Network net = fixture::network(gen::path_graph(3), {2}, kLight);
  RoundConfig cfg = fixture::round({0, 1}, 0);
  cfg.forced_leader.reset();
  const RoundResult r = run_round(net, cfg, fixture::inputs(3, 2, 1), kLight);
  EXPECT_FALSE(r.completed);
  EXPECT_FALSE(r.abort_reason.empty());
  EXPECT_THROW(apply_round(r, model::ParameterVector::zeros(2)), AbortRoundError);
}

TEST(Round, InvalidInputsRejected) {
  Network net = fixture::network(gen::path_graph(3), {0}, kLight);
  RoundInputs in = fixture::inputs(2, 2, 1);  // client 2 has no update
  EXPECT_THROW(run_round(net, fixture::round({0, 1, 2}, 0), in, kLight), ParameterError);
  EXPECT_THROW(run_round(net, fixture::round({}, 0), in, kLight), ParameterError);
}

// Everything a route must satisfy, over random connected graphs.
TEST(Round, RouteInvariants) {
  gen::for_all(61, 40, [](Rng& rng) {
    const std::size_t n = 3 + rng.below(40);
    const topology::Graph g = gen::connected_graph(rng, n, 2.0 / static_cast<double>(n));
    Network net = fixture::network(g, {0}, kLight, rng.next_u64());
    const RoundInputs in = fixture::inputs(n, 3, rng.next_u64());
    RoundConfig cfg = fixture::round(fixture::iota(n), 0, rng.next_u64());
    cfg.shortcut_return = rng.bernoulli(0.5);
    const RoundResult r = run_round(net, cfg, in, kLight);
    ASSERT_TRUE(r.completed) << r.abort_reason;

    std::set<ClientId> unique(r.contributors.begin(), r.contributors.end());
    EXPECT_EQ(unique.size(), r.contributors.size());
    EXPECT_EQ(unique.size(), n);
    if (!cfg.shortcut_return) {
      EXPECT_EQ(r.transmissions, 2 * (n - 1));
    } else {
      EXPECT_LE(r.transmissions, 2 * (n - 1));
    }
    ClientId at = 0;
    for (const HopInfo& h : r.route) {
      EXPECT_EQ(h.from, at);
      EXPECT_TRUE(g.has_edge(h.from, h.to));
      at = h.to;
    }
    EXPECT_EQ(at, 0u);
    EXPECT_EQ(*r.aggregate, fixture::sum_of(in, r.contributors));

    // Running sum seen on each delivered hop: mask plus the visited prefix.
    std::vector<ClientId> prefix{0};
    for (const Observation& o : r.observations) {
      if (!o.accepted) continue;
      model::EncodedUpdate expect = fixture::sum_of(in, prefix);
      expect = model::apply_mask(expect, r.noise);
      EXPECT_EQ(o.plaintext, expect);
      if (o.kind == HopKind::kForward) {
        prefix.push_back(o.to);
      }
    }
  });
}

TEST(Round, ConnectedHundredTargetsWithinBound) {
  gen::for_all(62, 5, [](Rng& rng) {
    const topology::Graph g = gen::connected_graph(rng, 100, 0.06);
    Network net = fixture::network(g, {0, 1, 2}, kLight, rng.next_u64());
    const RoundInputs in = fixture::inputs(100, 4, rng.next_u64());
    RoundConfig cfg = fixture::round(fixture::iota(100), 0, rng.next_u64());
    cfg.forced_leader.reset();
    const RoundResult r = run_round(net, cfg, in, kLight);
    ASSERT_TRUE(r.completed);
    EXPECT_LE(r.transmissions, 198u);
    EXPECT_EQ(r.contributors.size(), 100u);
  });
}

TEST(Round, DeterministicTranscript) {
  const topology::Graph g = topology::generate_random_graph(30, 0.2, 3);
  Network a = fixture::network(g, {0, 1}, kAes, 4);
  Network b = fixture::network(g, {0, 1}, kAes, 4);
  const RoundInputs in = fixture::inputs(30, 4, 5);
  RoundConfig cfg = fixture::round(fixture::iota(30), 0, 6);
  cfg.forced_leader.reset();
  const RoundResult r1 = run_round(a, cfg, in, kAes);
  const RoundResult r2 = run_round(b, cfg, in, kAes);
  EXPECT_EQ(r1.transcript_hash, r2.transcript_hash);
  EXPECT_EQ(r1.transcript, r2.transcript);
  cfg.seed = 7;
  EXPECT_NE(run_round(a, cfg, in, kAes).transcript_hash, r1.transcript_hash);
  EXPECT_EQ(r1.transcript_hash, transcript_hash(r1.transcript));
}

TEST(Round, FreshNoiseEachRound) {
  Network net = fixture::network(gen::path_graph(3), {0}, kLight);
  const RoundInputs in = fixture::inputs(3, 2, 1);
  RoundConfig cfg = fixture::round({0, 1, 2}, 0, 1);
  const RoundResult r0 = run_round(net, cfg, in, kLight);
  cfg.round = 1;
  cfg.seed = 2;
  const RoundResult r1 = run_round(net, cfg, in, kLight);
  EXPECT_NE(r0.noise.values, r1.noise.values);
  EXPECT_EQ(r0.noise.values.size(), 3u);  // dim + 1, weight slot masked too
  EXPECT_EQ(*r0.aggregate, *r1.aggregate);
}

TEST(Round, MaskingTransparent) {
  const topology::Graph g = topology::generate_random_graph(20, 0.3, 3);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(20, 3, 2);
  RoundConfig cfg = fixture::round(fixture::iota(20), 0);
  const RoundResult masked = run_round(net, cfg, in, kLight);
  cfg.masking = false;
  const RoundResult plain = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(masked.completed && plain.completed);
  EXPECT_EQ(*masked.aggregate, *plain.aggregate);
  EXPECT_EQ(masked.transmissions, plain.transmissions);
}

TEST(Round, LedgerReachesLiveComponent) {
  const topology::Graph g = gen::connected_graph(*std::make_unique<Rng>(5), 25, 0.1);
  Network net = fixture::network(g, {0}, kLight);
  RoundConfig cfg = fixture::round(fixture::iota(25), 0);
  const RoundResult r = run_round(net, cfg, fixture::inputs(25, 2, 3), kLight);
  ASSERT_FALSE(r.ledger.records().empty());
  for (const BroadcastRecord& rec : r.ledger.records()) {
    ASSERT_TRUE(rec.propagation);
    EXPECT_EQ(rec.propagation->size(), 25u);
  }
  EXPECT_EQ(r.ledger.records().front().action, "start");
  EXPECT_EQ(r.ledger.current_holder(), std::optional<ClientId>(0));
}

// ---- tampering ----

TEST(Round, TamperedEnvelopeRejectedThenRetried) {
  Network net = fixture::network(gen::path_graph(4), {0}, kAes);
  const RoundInputs in = fixture::inputs(4, 3, 2);
  RoundHooks hooks;
  std::size_t calls = 0;
  hooks.intercept = [&](const HopInfo& hop, const Bytes& wire) {
    Interception ic;
    if (calls++ == 0) {
      EXPECT_FALSE(hop.retry);
      Bytes t = wire;
      t[t.size() / 2] ^= 0x10;
      ic.replace = t;
    }
    return ic;
  };
  const RoundResult r = run_round(net, fixture::round({0, 1, 2, 3}, 0), in, kAes, hooks);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.rejections, 1u);
  EXPECT_EQ(r.retries, 1u);
  EXPECT_EQ(r.transmissions, 7u);
  EXPECT_TRUE(r.flagged.empty());
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, {0, 1, 2, 3}));
  // The recipient's reject lands in the ledger at the delivery tick.
  const auto& recs = r.ledger.records();
  const auto rej = std::find_if(recs.begin(), recs.end(),
                                [](const BroadcastRecord& b) { return b.action == "reject"; });
  ASSERT_NE(rej, recs.end());
  EXPECT_EQ(rej->actor, 1u);
  EXPECT_EQ(rej->tau, 1u);
}

TEST(Round, PersistentTamperingFlagsAndRevokes) {
  Network net = fixture::network(gen::path_graph(4), {0}, kAes);
  const RoundInputs in = fixture::inputs(4, 3, 2);
  const std::size_t links_before = net.keys.links.size();
  const auto material = net.keys.find(1, 2)->derivation();
  RoundHooks hooks;
  hooks.intercept = [&](const HopInfo& hop, const Bytes& wire) {
    Interception ic;
    if (hop.from == 1 && hop.to == 2) {
      Bytes t = wire;
      t.back() ^= 0x01;
      ic.replace = t;
    }
    return ic;
  };
  const RoundResult r = run_round(net, fixture::round({0, 1, 2, 3}, 0), in, kAes, hooks);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.abort_reason, "malicious-holder");
  EXPECT_EQ(r.flagged, (std::vector<ClientId>{1}));
  EXPECT_EQ(r.rejections, 2u);
  // Every revoked id is gone from all rings and all surviving links.
  for (const auto& ring : net.keys.rings) {
    for (keying::KeyId id : material) EXPECT_FALSE(ring.contains(id));
  }
  for (const auto& [pair, link] : net.keys.links) {
    for (keying::KeyId id : link.derivation()) {
      EXPECT_EQ(std::find(material.begin(), material.end(), id), material.end());
    }
  }
  EXPECT_LE(net.keys.links.size(), links_before);
}

TEST(Round, InjectedEnvelopesAllRejected) {
  const topology::Graph g = topology::generate_random_graph(20, 0.3, 4);
  Network net = fixture::network(g, {0}, kAes);
  const RoundInputs in = fixture::inputs(20, 3, 3);
  adversary::EnvelopeAttacker attacker(5, 0, 3);
  RoundHooks hooks;
  hooks.intercept = [&](const HopInfo& hop, const Bytes& wire) { return attacker(hop, wire); };
  const RoundResult r = run_round(net, fixture::round(fixture::iota(20), 0), in, kAes, hooks);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.injected_accepted, 0u);
  EXPECT_EQ(r.injected_rejected, attacker.injected());
  EXPECT_EQ(r.injected_rejected, 3 * r.transmissions);
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, r.contributors));
}

// ---- dropouts ----

TEST(Round, DropBeforeAggregation) {
  const topology::Graph g = gen::connected_graph(*std::make_unique<Rng>(7), 100, 0.08);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(100, 4, 4);
  RoundConfig cfg = fixture::round(fixture::iota(100), 0);
  cfg.dropouts = {{57, 0}};
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.dropouts, 1u);
  std::set<ClientId> alive;
  for (ClientId c = 0; c < 100; ++c) {
    if (c != 57) alive.insert(c);
  }
  const auto reach = oracle::reachable_targets(net.secure_graph(), 0, alive);
  EXPECT_EQ(std::set<ClientId>(r.contributors.begin(), r.contributors.end()), reach);
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, std::vector<ClientId>(reach.begin(), reach.end())));
}

TEST(Round, LeafDroppingAfterReplyChangesNothing) {
  Network net = fixture::network(gen::path_graph(4), {0}, kLight);
  const RoundInputs in = fixture::inputs(4, 3, 5);
  RoundConfig cfg = fixture::round({0, 1, 2, 3}, 0);
  const RoundResult base = run_round(net, cfg, in, kLight);
  cfg.dropouts = {{3, 5}};  // 3 replied to 2 at tick 3 -> 4
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(*r.aggregate, *base.aggregate);
  EXPECT_EQ(r.transmissions, base.transmissions);
}

TEST(Round, FifteenRandomDropouts) {
  const topology::Graph g = gen::connected_graph(*std::make_unique<Rng>(8), 100, 0.08);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(100, 4, 6);
  RoundConfig cfg = fixture::round(fixture::iota(100), 0);
  const RoundResult base = run_round(net, cfg, in, kLight);
  Rng rng(9);
  for (std::uint32_t c : rng.sample_distinct(99, 15)) {
    cfg.dropouts.push_back({c + 1, 1 + rng.below(198)});
  }
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_LT(r.transmissions, base.transmissions);
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, r.contributors));

  std::set<ClientId> survivors;
  for (ClientId c = 0; c < 100; ++c) survivors.insert(c);
  for (const auto& d : cfg.dropouts) survivors.erase(d.client);
  for (ClientId c : oracle::reachable_targets(net.secure_graph(), 0, survivors)) {
    EXPECT_NE(std::find(r.contributors.begin(), r.contributors.end(), c), r.contributors.end())
        << "live reachable client " << c << " missing";
  }
}

TEST(Round, LeaderDropoutRetriesOrAborts) {
  const topology::Graph g = gen::complete_graph(6);
  Network net = fixture::network(g, {0, 1}, kLight);
  const RoundInputs in = fixture::inputs(6, 2, 7);
  RoundConfig cfg = fixture::round(fixture::iota(6), 0);
  cfg.dropouts = {{0, 2}};
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_EQ(r.leader, 1u);
  EXPECT_EQ(r.attempts, 2u);
  EXPECT_EQ(std::count(r.contributors.begin(), r.contributors.end(), 0u), 0);

  Network single = fixture::network(g, {0}, kLight);
  const RoundResult stuck = run_round(single, cfg, in, kLight);
  EXPECT_FALSE(stuck.completed);
}

TEST(Round, DisconnectedTargetsExcluded) {
  // 0-1-2 and an isolated 3-4 pair; 3 and 4 cannot be reached.
  topology::Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(3, 4);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(5, 2, 8);
  const RoundResult r = run_round(net, fixture::round(fixture::iota(5), 0), in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.contributors, (std::vector<ClientId>{0, 1, 2}));
}

// ---- termination in a round ----

TEST(Round, ForcedBacktrackOnLongPath) {
  // 41-node path, leader in the middle, T = 75: the left arm costs 40 hops,
  // forced backtrack starts at tick 50 with ten clients still open.
  Network net = fixture::network(gen::path_graph(41), {20}, kLight);
  const RoundInputs in = fixture::inputs(41, 2, 9);
  RoundConfig cfg = fixture::round(fixture::iota(41), 20);
  cfg.deadline = 75;
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_EQ(r.contributors.size(), 31u);
  for (ClientId c = 31; c <= 40; ++c) {
    EXPECT_EQ(std::count(r.contributors.begin(), r.contributors.end(), c), 0);
  }
  EXPECT_LE(r.ticks, 76u);  // 60 hops plus the upload tick
  EXPECT_EQ(r.transmissions, 60u);
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, r.contributors));
}

TEST(Round, DeadlineWithoutPressureChangesNothing) {
  const topology::Graph g = topology::generate_random_graph(30, 0.2, 5);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(30, 2, 1);
  RoundConfig cfg = fixture::round(fixture::iota(30), 0);
  const RoundResult a = run_round(net, cfg, in, kLight);
  cfg.deadline = 100000;
  const RoundResult b = run_round(net, cfg, in, kLight);
  EXPECT_EQ(a.transcript_hash, b.transcript_hash);
}

TEST(Round, ExpiresWhenDeadlineTooShort) {
  Network net = fixture::network(gen::path_graph(10), {0}, kLight);
  RoundConfig cfg = fixture::round(fixture::iota(10), 0);
  cfg.deadline = 3;
  const RoundResult r = run_round(net, cfg, fixture::inputs(10, 2, 1), kLight);
  // Forced backtrack at tick 2 still needs 2 ticks back after 2 out.
  EXPECT_TRUE(r.completed || r.abort_reason == "deadline");
  cfg.deadline = 1;
  const RoundResult tight = run_round(net, cfg, fixture::inputs(10, 2, 1), kLight);
  EXPECT_FALSE(tight.completed);
  EXPECT_EQ(tight.abort_reason, "deadline");
}

// ---- joins ----

TEST(Round, JoinBeforeCutoffContributes) {
  const topology::Graph g = gen::complete_graph(12);
  Network net = fixture::network(g, {0}, kLight);
  const RoundInputs in = fixture::inputs(12, 2, 3);
  RoundConfig cfg = fixture::round(fixture::iota(10), 0);
  cfg.joins = {{10, 2}, {11, 9}};
  const RoundResult r = run_round(net, cfg, in, kLight);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.accepted_joins, 1u);
  EXPECT_EQ(r.rejected_joins, 1u);
  EXPECT_NE(std::find(r.contributors.begin(), r.contributors.end(), 10u), r.contributors.end());
  EXPECT_EQ(std::find(r.contributors.begin(), r.contributors.end(), 11u), r.contributors.end());
  EXPECT_EQ(*r.aggregate, fixture::sum_of(in, r.contributors));
}

// ---- holder claims ----

TEST(Claims, LedgerDecidesHolder) {
  const topology::Graph g = gen::complete_graph(6);
  Network net = fixture::network(g, {0}, kAes);
  const RoundInputs in = fixture::inputs(6, 2, 3);
  std::vector<ClaimVerdict> verdicts;
  RoundHooks hooks;
  int hop = 0;
  hooks.after_hop = [&](RoundContext& ctx) {
    if (hop++ != 2) return;
    const ClientId holder = ctx.holder();
    const ClientId liar = holder == 5 ? 4 : 5;
    verdicts.push_back(adversary::inject_byzantine_claim(ctx, kAes, liar, false));
    verdicts.push_back(adversary::inject_byzantine_claim(ctx, kAes, liar, true));
    verdicts.push_back(ctx.submit_claim(sign_claim(kAes, ctx.network(), holder, ctx.now()), {}));
  };
  const RoundResult r = run_round(net, fixture::round(fixture::iota(6), 0), in, kAes, hooks);
  ASSERT_TRUE(r.completed);
  ASSERT_EQ(verdicts.size(), 3u);
  EXPECT_TRUE(verdicts[0].signature_valid);
  EXPECT_FALSE(verdicts[0].ledger_consistent);
  EXPECT_FALSE(verdicts[0].accepted());
  EXPECT_EQ(verdicts[0].evaluated_by.size(), 5u);
  EXPECT_FALSE(verdicts[1].signature_valid);
  EXPECT_FALSE(verdicts[1].accepted());
  EXPECT_TRUE(verdicts[2].accepted());
  EXPECT_EQ(r.claims_rejected, 2u);
  EXPECT_EQ(r.claims_accepted, 1u);
}

}  // namespace
}  // namespace ppt::protocol
