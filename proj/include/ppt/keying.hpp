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

// Random key pre-distribution with private shared-key discovery.
//
// Clients draw rings of distinct keys from a common pool. Instead of
// broadcasting key ids, a client broadcasts one challenge per ring key; a
// neighbour learns which keys the two rings share by trial decryption. The
// pairwise communication key is the XOR of every shared key in ascending id
// order. Adjacent pairs with too few shared keys get a path key through a
// broker that hands both endpoints unused pool keys.

#ifndef PPT_KEYING_HPP_
#define PPT_KEYING_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "ppt/common.hpp"
#include "ppt/crypto.hpp"
#include "ppt/topology.hpp"

namespace ppt::keying {

using KeyId = std::uint32_t;
using crypto::SymmetricKey;
using KeyMaterial = std::map<KeyId, SymmetricKey>;

class KeyPool {
 public:
  KeyPool() = default;
  explicit KeyPool(std::vector<SymmetricKey> keys) : keys_(std::move(keys)) {}

  std::size_t size() const { return keys_.size(); }
  const SymmetricKey& key(KeyId id) const;

  friend bool operator==(const KeyPool&, const KeyPool&) = default;

 private:
  std::vector<SymmetricKey> keys_;
};

struct KeyRing {
  ClientId owner = 0;
  // Ordered by key id; the challenge index of an entry is its position here.
  std::vector<std::pair<KeyId, SymmetricKey>> entries;

  std::size_t size() const { return entries.size(); }
  bool contains(KeyId id) const;
  std::vector<KeyId> ids() const;
  // Drops the given ids; returns how many were removed.
  std::size_t erase(const std::set<KeyId>& ids);
};

struct CommunicationKey {
  ClientId low = 0;   // smaller endpoint id
  ClientId high = 0;  // larger endpoint id
  SymmetricKey key{};
  KeyMaterial material;  // the shared keys XORed into `key`
  bool via_path_key = false;

  std::vector<KeyId> derivation() const;
  std::pair<ClientId, ClientId> pair() const { return {low, high}; }
};

struct Challenge {
  ClientId issuer = 0;
  std::uint16_t index = 0;
  Bytes ciphertext;

  friend bool operator==(const Challenge&, const Challenge&) = default;
};

inline constexpr std::size_t kDefaultPathCandidates = 4;

// Pool of eta keys; key i is the first 16 bytes of SHA-256 over a domain tag,
// the seed and i.
KeyPool generate_pool(std::size_t pool_size, std::uint64_t seed);

// l distinct keys drawn uniformly without replacement.
KeyRing draw_ring(const KeyPool& pool, ClientId owner, std::size_t ring_size,
                  std::uint64_t seed);

// Challenge plaintext: magic(8) || issuer u32 LE || index u16 LE.
Bytes challenge_plaintext(ClientId issuer, std::uint16_t index);

// One sealed challenge per ring entry.
std::vector<Challenge> issue_challenges(const KeyRing& ring,
                                        const crypto::CipherSuite& suite);

// Ids of `mine` that open one of the received challenges with the expected
// plaintext. Throws ParameterError if the challenges are not all from the same
// issuer.
std::set<KeyId> discover_shared_keys(const KeyRing& mine,
                                     std::span<const Challenge> received,
                                     const crypto::CipherSuite& suite);

// XOR of every shared key in ascending id order. Throws
// InsufficientSharedKeysError unless shared.size() > threshold.
CommunicationKey derive_communication_key(ClientId a, ClientId b,
                                          const KeyMaterial& shared,
                                          std::size_t threshold);

struct PathKeyResult {
  CommunicationKey key;
  std::vector<KeyId> broker_view;  // candidate ids handed out by the broker
  std::vector<KeyId> selection_a;
  std::vector<KeyId> selection_b;
};

// The broker sends the same candidate keys to a and b. Each endpoint keeps all
// but one candidate chosen uniformly at random, the endpoints learn their
// overlap with the challenge protocol, and the overlap is XOR-derived.
// Requires a-b, a-broker and b-broker edges in `graph` (ParameterError
// otherwise) and at least max(4, threshold + 3) candidates (PathKeyError
// otherwise) so the overlap always exceeds the threshold.
PathKeyResult establish_path_key(const topology::Graph& graph, ClientId a,
                                 ClientId b, ClientId broker,
                                 const KeyMaterial& candidates,
                                 std::size_t threshold, std::uint64_t seed,
                                 const crypto::CipherSuite& suite);

using LinkMap = std::map<std::pair<ClientId, ClientId>, CommunicationKey>;

struct RevocationResult {
  std::vector<std::pair<ClientId, ClientId>> rederived;
  std::vector<std::pair<ClientId, ClientId>> needs_path_key;
};

// Removes `poisoned` from every ring and every link's material. Links whose
// material changed are re-derived when more than `threshold` keys remain
// and are otherwise removed from `links` and reported in needs_path_key.
RevocationResult revoke_keys(const std::set<KeyId>& poisoned,
                             std::vector<KeyRing>& rings, LinkMap& links,
                             std::size_t threshold);

struct EstablishmentConfig {
  std::size_t pool_size = 2000;
  std::size_t ring_size = 20;
  std::size_t threshold = 0;
  std::size_t path_candidates = kDefaultPathCandidates;
  std::uint64_t seed = 1;
};

struct EstablishmentStats {
  std::size_t physical_links = 0;
  std::size_t shared_key_links = 0;
  std::size_t path_key_links = 0;
  std::size_t unkeyed_links = 0;
};

enum class Execution { kSerial, kParallel };

// Key material for a whole network: pool, rings and per-link keys.
class KeyDirectory {
 public:
  KeyPool pool;
  std::vector<KeyRing> rings;
  LinkMap links;
  std::vector<Challenge> challenge_log;
  EstablishmentStats stats;
  std::size_t threshold = 0;

  const CommunicationKey* find(ClientId a, ClientId b) const;
  bool has_link(ClientId a, ClientId b) const { return find(a, b) != nullptr; }
  bool has_any_link(ClientId c) const;
  // Physical graph restricted to links that carry a communication key.
  topology::Graph secure_graph(std::size_t node_count) const;
};

// Runs pool generation, ring drawing, challenge broadcast and discovery on
// every physical edge, XOR derivation, and path-key establishment for the
// remaining edges (broker = lowest-id common neighbour already keyed with both
// endpoints; repeated until no further link can be keyed).
KeyDirectory establish_keys(const topology::Graph& physical,
                            const EstablishmentConfig& config,
                            const crypto::CipherSuite& suite,
                            Execution execution = Execution::kParallel);

// Keys the listed physical edges through path-key brokers, never using a
// broker in `excluded`. Repeats passes until no further edge can be keyed and
// returns the number keyed; pairs that stay unkeyed are absent from `links`.
std::size_t establish_missing_links(
    KeyDirectory& directory, const topology::Graph& physical,
    const EstablishmentConfig& config, const crypto::CipherSuite& suite,
    std::vector<std::pair<ClientId, ClientId>> pending,
    const std::set<ClientId>& excluded);

// Length-prefixed binary records: len u32 | issuer u32 | index u16 |
// ciphertext, where len counts the bytes after itself.
void write_challenge_log(std::ostream& out, std::span<const Challenge> log);
std::vector<Challenge> read_challenge_log(std::istream& in);

// Debug-only plaintext dump of rings and link keys (text, hex).
void dump_keys(std::ostream& out, const KeyDirectory& directory);

}  // namespace ppt::keying

#endif  // PPT_KEYING_HPP_
