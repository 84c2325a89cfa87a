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

// Small networks and round inputs shared by the protocol, adversary and
// acceptance tests.

#ifndef PPT_TESTS_FIXTURES_HPP_
#define PPT_TESTS_FIXTURES_HPP_

#include <numeric>
#include <set>
#include <vector>

#include "ppt/crypto.hpp"
#include "ppt/model.hpp"
#include "ppt/protocol.hpp"
#include "ppt/rng.hpp"
#include "support/generators.hpp"

namespace ppt::fixture {

// A 30-key pool with 20-key rings: any two rings share at least 10 keys, so
// every physical edge gets a communication key without a broker.
inline keying::EstablishmentConfig dense_keys(std::uint64_t seed = 1) {
  return {.pool_size = 30, .ring_size = 20, .threshold = 0, .seed = seed};
}

inline protocol::Network network(topology::Graph g, std::set<ClientId> server_adjacent,
                                 const crypto::CipherSuite& suite, std::uint64_t seed = 1) {
  return protocol::build_network(std::move(g), std::move(server_adjacent), dense_keys(seed),
                                 suite);
}

inline std::vector<ClientId> iota(std::size_t n) {
  std::vector<ClientId> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Random X_i with small integer weights for every client in [0, n).
inline protocol::RoundInputs inputs(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  protocol::RoundInputs in;
  for (ClientId c = 0; c < n; ++c) in.updates.emplace(c, gen::small_update(rng, dim));
  return in;
}

inline protocol::RoundConfig round(std::vector<ClientId> targets, ClientId leader,
                                   std::uint64_t seed = 1) {
  protocol::RoundConfig cfg;
  cfg.seed = seed;
  cfg.targets = std::move(targets);
  cfg.forced_leader = leader;
  return cfg;
}

inline model::EncodedUpdate sum_of(const protocol::RoundInputs& in,
                                   const std::vector<ClientId>& clients) {
  std::vector<model::EncodedUpdate> parts;
  for (ClientId c : clients) parts.push_back(in.updates.at(c));
  return model::aggregate(parts);
}

inline topology::Graph star(std::size_t leaves) {
  topology::Graph g(leaves + 1);
  for (std::size_t i = 1; i <= leaves; ++i) g.add_edge(0, static_cast<ClientId>(i));
  return g;
}

}  // namespace ppt::fixture

#endif  // PPT_TESTS_FIXTURES_HPP_
