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

#include "ppt/keying.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "ppt/kernels.hpp"
#include "ppt/rng.hpp"

namespace ppt::keying {
namespace {

constexpr std::array<std::uint8_t, 8> kChallengeMagic = {'P', 'P', 'T', 'E',
                                                         'G', 'C', 'H', '1'};

std::pair<ClientId, ClientId> ordered(ClientId a, ClientId b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

KeyRing ring_from(ClientId owner, const KeyMaterial& material) {
  KeyRing ring;
  ring.owner = owner;
  ring.entries.assign(material.begin(), material.end());
  return ring;
}

}  // namespace

const SymmetricKey& KeyPool::key(KeyId id) const {
  if (id >= keys_.size()) throw ParameterError("key id outside the pool");
  return keys_[id];
}

bool KeyRing::contains(KeyId id) const {
  return std::binary_search(
      entries.begin(), entries.end(), std::pair<KeyId, SymmetricKey>{id, {}},
      [](const auto& x, const auto& y) { return x.first < y.first; });
}

std::vector<KeyId> KeyRing::ids() const {
  std::vector<KeyId> out;
  out.reserve(entries.size());
  for (const auto& [id, key] : entries) out.push_back(id);
  return out;
}

std::size_t KeyRing::erase(const std::set<KeyId>& ids) {
  const std::size_t before = entries.size();
  std::erase_if(entries, [&](const auto& e) { return ids.contains(e.first); });
  return before - entries.size();
}

std::vector<KeyId> CommunicationKey::derivation() const {
  std::vector<KeyId> out;
  out.reserve(material.size());
  for (const auto& [id, key] : material) out.push_back(id);
  return out;
}

KeyPool generate_pool(std::size_t pool_size, std::uint64_t seed) {
  if (pool_size == 0) throw ParameterError("key pool must not be empty");
  std::vector<SymmetricKey> keys(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    ByteWriter w;
    w.bytes(as_bytes("ppt-key-pool"));
    w.u64(seed);
    w.u64(i);
    const Digest d = sha256(w.view());
    std::memcpy(keys[i].data(), d.data(), crypto::kKeyBytes);
  }
  return KeyPool(std::move(keys));
}

KeyRing draw_ring(const KeyPool& pool, ClientId owner, std::size_t ring_size,
                  std::uint64_t seed) {
  if (ring_size > pool.size()) {
    throw ParameterError("ring size exceeds pool size");
  }
  Rng rng(seed);
  std::vector<std::uint32_t> ids =
      rng.sample_distinct(static_cast<std::uint32_t>(pool.size()),
                          static_cast<std::uint32_t>(ring_size));
  std::sort(ids.begin(), ids.end());
  KeyRing ring;
  ring.owner = owner;
  ring.entries.reserve(ids.size());
  for (KeyId id : ids) ring.entries.emplace_back(id, pool.key(id));
  return ring;
}

Bytes challenge_plaintext(ClientId issuer, std::uint16_t index) {
  ByteWriter w;
  w.bytes(kChallengeMagic);
  w.u32(issuer);
  w.u16(index);
  return std::move(w).take();
}

std::vector<Challenge> issue_challenges(const KeyRing& ring,
                                        const crypto::CipherSuite& suite) {
  if (ring.entries.size() > 0xFFFF) {
    throw ParameterError("ring too large for 16-bit challenge index");
  }
  std::vector<Challenge> out;
  out.reserve(ring.entries.size());
  for (std::size_t i = 0; i < ring.entries.size(); ++i) {
    const auto index = static_cast<std::uint16_t>(i);
    out.push_back({ring.owner, index,
                   suite.seal(ring.entries[i].second,
                              challenge_plaintext(ring.owner, index))});
  }
  return out;
}

std::set<KeyId> discover_shared_keys(const KeyRing& mine,
                                     std::span<const Challenge> received,
                                     const crypto::CipherSuite& suite) {
  std::set<KeyId> shared;
  if (received.empty()) return shared;
  const ClientId issuer = received.front().issuer;
  std::vector<std::unique_ptr<crypto::KeyedOpener>> openers;
  openers.reserve(mine.entries.size());
  for (const auto& entry : mine.entries) openers.push_back(suite.opener(entry.second));
  for (const Challenge& challenge : received) {
    if (challenge.issuer != issuer) {
      throw ParameterError("challenges from more than one issuer");
    }
    const Bytes expected = challenge_plaintext(issuer, challenge.index);
    for (std::size_t k = 0; k < mine.entries.size(); ++k) {
      const std::optional<Bytes> pt = openers[k]->try_open(challenge.ciphertext);
      if (pt && *pt == expected) {
        shared.insert(mine.entries[k].first);
        break;
      }
    }
  }
  return shared;
}

CommunicationKey derive_communication_key(ClientId a, ClientId b,
                                          const KeyMaterial& shared,
                                          std::size_t threshold) {
  if (shared.size() <= threshold) {
    throw InsufficientSharedKeysError(
        "pair shares " + std::to_string(shared.size()) +
        " keys, needs more than " + std::to_string(threshold));
  }
  CommunicationKey out;
  std::tie(out.low, out.high) = ordered(a, b);
  out.material = shared;
  for (const auto& [id, key] : shared) out.key = crypto::xor_keys(out.key, key);
  return out;
}

PathKeyResult establish_path_key(const topology::Graph& graph, ClientId a,
                                 ClientId b, ClientId broker,
                                 const KeyMaterial& candidates,
                                 std::size_t threshold, std::uint64_t seed,
                                 const crypto::CipherSuite& suite) {
  if (a == b || broker == a || broker == b) {
    throw ParameterError("path key needs three distinct clients");
  }
  if (!graph.has_edge(a, b)) throw ParameterError("endpoints are not adjacent");
  if (!graph.has_edge(a, broker) || !graph.has_edge(b, broker)) {
    throw ParameterError("broker must be adjacent to both endpoints");
  }
  // Keeping m-1 of m keys each leaves an overlap of at least m-2.
  const std::size_t needed = std::max<std::size_t>(4, threshold + 3);
  if (candidates.size() < needed) {
    throw PathKeyError("path key needs at least " + std::to_string(needed) +
                       " candidate keys, got " +
                       std::to_string(candidates.size()));
  }

  const std::vector<std::pair<KeyId, SymmetricKey>> list(candidates.begin(),
                                                         candidates.end());
  auto select = [&](std::uint64_t stream) {
    Rng rng(derive_seed(seed, stream));
    const std::size_t withheld = rng.below(list.size());
    KeyMaterial keep;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i != withheld) keep.insert(list[i]);
    }
    return keep;
  };
  const KeyMaterial kept_a = select(a);
  const KeyMaterial kept_b = select(b);

  // Overlap discovery between the two selections, both directions.
  const KeyRing ring_a = ring_from(a, kept_a);
  const KeyRing ring_b = ring_from(b, kept_b);
  const std::set<KeyId> seen_by_b =
      discover_shared_keys(ring_b, issue_challenges(ring_a, suite), suite);
  const std::set<KeyId> seen_by_a =
      discover_shared_keys(ring_a, issue_challenges(ring_b, suite), suite);
  if (seen_by_a != seen_by_b) throw PathKeyError("asymmetric overlap discovery");

  KeyMaterial shared;
  for (KeyId id : seen_by_a) shared.emplace(id, candidates.at(id));

  PathKeyResult result;
  result.key = derive_communication_key(a, b, shared, threshold);
  result.key.via_path_key = true;
  for (const auto& [id, key] : candidates) result.broker_view.push_back(id);
  result.selection_a = ring_a.ids();
  result.selection_b = ring_b.ids();
  return result;
}

RevocationResult revoke_keys(const std::set<KeyId>& poisoned,
                             std::vector<KeyRing>& rings, LinkMap& links,
                             std::size_t threshold) {
  RevocationResult result;
  if (poisoned.empty()) return result;
  for (KeyRing& ring : rings) ring.erase(poisoned);
  for (auto it = links.begin(); it != links.end();) {
    CommunicationKey& link = it->second;
    const std::size_t removed = std::erase_if(
        link.material, [&](const auto& e) { return poisoned.contains(e.first); });
    if (removed == 0) {
      ++it;
      continue;
    }
    if (link.material.size() > threshold) {
      const bool path = link.via_path_key;
      link = derive_communication_key(link.low, link.high, link.material,
                                      threshold);
      link.via_path_key = path;
      result.rederived.push_back(it->first);
      ++it;
    } else {
      result.needs_path_key.push_back(it->first);
      it = links.erase(it);
    }
  }
  return result;
}

const CommunicationKey* KeyDirectory::find(ClientId a, ClientId b) const {
  auto it = links.find(ordered(a, b));
  return it == links.end() ? nullptr : &it->second;
}

bool KeyDirectory::has_any_link(ClientId c) const {
  for (const auto& [pair, link] : links) {
    if (pair.first == c || pair.second == c) return true;
  }
  return false;
}

topology::Graph KeyDirectory::secure_graph(std::size_t node_count) const {
  topology::Graph g(node_count);
  for (const auto& [pair, link] : links) g.add_edge(pair.first, pair.second);
  return g;
}

std::size_t establish_missing_links(
    KeyDirectory& directory, const topology::Graph& physical,
    const EstablishmentConfig& config, const crypto::CipherSuite& suite,
    std::vector<std::pair<ClientId, ClientId>> pending,
    const std::set<ClientId>& excluded) {
  std::vector<bool> in_some_ring(directory.pool.size(), false);
  for (const KeyRing& ring : directory.rings) {
    for (const auto& [id, key] : ring.entries) in_some_ring[id] = true;
  }
  std::vector<KeyId> unused;
  for (KeyId id = 0; id < directory.pool.size(); ++id) {
    if (!in_some_ring[id]) unused.push_back(id);
  }

  std::size_t established = 0;
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const auto [a, b] = *it;
      std::optional<ClientId> broker;
      for (ClientId k : physical.neighbors(a)) {
        if (k != b && !excluded.contains(k) && physical.has_edge(k, b) &&
            directory.has_link(a, k) && directory.has_link(b, k)) {
          broker = k;
          break;
        }
      }
      if (!broker) {
        ++it;
        continue;
      }
      // Unused keys first; fall back to keys outside both endpoint rings.
      std::vector<KeyId> source = unused;
      if (source.size() < config.path_candidates) {
        source.clear();
        for (KeyId id = 0; id < directory.pool.size(); ++id) {
          if (!directory.rings[a].contains(id) &&
              !directory.rings[b].contains(id)) {
            source.push_back(id);
          }
        }
      }
      const std::uint64_t link_seed =
          derive_seed(config.seed, (static_cast<std::uint64_t>(a) << 32) | b);
      Rng rng(derive_seed(link_seed, 0));
      KeyMaterial candidates;
      for (std::uint32_t idx : rng.sample_distinct(
               static_cast<std::uint32_t>(source.size()),
               static_cast<std::uint32_t>(std::min(config.path_candidates,
                                                   source.size())))) {
        candidates.emplace(source[idx], directory.pool.key(source[idx]));
      }
      try {
        PathKeyResult pk =
            establish_path_key(physical, a, b, *broker, candidates,
                               config.threshold, link_seed, suite);
        directory.links[ordered(a, b)] = std::move(pk.key);
        ++established;
        progress = true;
        it = pending.erase(it);
      } catch (const PathKeyError&) {
        ++it;
      }
    }
  }
  return established;
}

KeyDirectory establish_keys(const topology::Graph& physical,
                            const EstablishmentConfig& config,
                            const crypto::CipherSuite& suite,
                            Execution execution) {
  const std::size_t n = physical.node_count();
  KeyDirectory dir;
  dir.threshold = config.threshold;
  dir.pool = generate_pool(config.pool_size, derive_seed(config.seed, 1));
  dir.rings.reserve(n);
  for (ClientId c = 0; c < n; ++c) {
    dir.rings.push_back(draw_ring(dir.pool, c, config.ring_size,
                                  derive_seed(config.seed, 1000 + c)));
  }
  std::vector<std::vector<Challenge>> challenges(n);
  for (ClientId c = 0; c < n; ++c) {
    challenges[c] = issue_challenges(dir.rings[c], suite);
    dir.challenge_log.insert(dir.challenge_log.end(), challenges[c].begin(),
                             challenges[c].end());
  }

  const std::vector<topology::Edge> edges = physical.edges();
  const std::vector<kernels::LinkDiscovery> found =
      execution == Execution::kParallel
          ? kernels::omp::discover_links(edges, dir.rings, challenges, suite)
          : kernels::serial::discover_links(edges, dir.rings, challenges, suite);

  std::vector<std::pair<ClientId, ClientId>> pending;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [a, b] = edges[i];
    if (!found[i].symmetric) throw Error("asymmetric shared-key discovery");
    if (found[i].shared.size() > config.threshold) {
      KeyMaterial shared;
      for (KeyId id : found[i].shared) shared.emplace(id, dir.pool.key(id));
      dir.links[{a, b}] = derive_communication_key(a, b, shared, config.threshold);
    } else {
      pending.emplace_back(a, b);
    }
  }
  dir.stats.physical_links = edges.size();
  dir.stats.shared_key_links = edges.size() - pending.size();
  dir.stats.path_key_links =
      establish_missing_links(dir, physical, config, suite, pending, {});
  dir.stats.unkeyed_links =
      edges.size() - dir.stats.shared_key_links - dir.stats.path_key_links;
  return dir;
}

void write_challenge_log(std::ostream& out, std::span<const Challenge> log) {
  for (const Challenge& c : log) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(4 + 2 + c.ciphertext.size()));
    w.u32(c.issuer);
    w.u16(c.index);
    w.bytes(c.ciphertext);
    const Bytes& b = w.view();
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(b.size()));
  }
}

std::vector<Challenge> read_challenge_log(std::istream& in) {
  Bytes all((std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>());
  ByteReader r(all);
  std::vector<Challenge> out;
  while (!r.done()) {
    const std::uint32_t len = r.u32();
    if (len < 6) throw DecodeError("challenge record too short");
    ByteReader rec(r.bytes(len));
    Challenge c;
    c.issuer = rec.u32();
    c.index = rec.u16();
    ByteView ct = rec.bytes(rec.remaining());
    c.ciphertext.assign(ct.begin(), ct.end());
    out.push_back(std::move(c));
  }
  return out;
}

void dump_keys(std::ostream& out, const KeyDirectory& directory) {
  for (const KeyRing& ring : directory.rings) {
    out << "ring " << ring.owner;
    for (const auto& [id, key] : ring.entries) out << ' ' << id << ':' << to_hex(key);
    out << '\n';
  }
  for (const auto& [pair, link] : directory.links) {
    out << "link " << pair.first << ' ' << pair.second << ' ' << to_hex(link.key)
        << (link.via_path_key ? " path" : " shared");
    for (KeyId id : link.derivation()) out << ' ' << id;
    out << '\n';
  }
}

}  // namespace ppt::keying
