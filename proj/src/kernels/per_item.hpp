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

// Loop bodies shared by the serial and OpenMP kernels. Each one depends only
// on its index and the kernel seed, never on iteration order.

#ifndef PPT_SRC_KERNELS_PER_ITEM_HPP_
#define PPT_SRC_KERNELS_PER_ITEM_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <set>
#include <span>
#include <vector>

#include "ppt/kernels.hpp"
#include "ppt/rng.hpp"

namespace ppt::kernels::detail {

inline LinkDiscovery discover_one(
    const topology::Edge& edge, std::span<const keying::KeyRing> rings,
    std::span<const std::vector<keying::Challenge>> challenges,
    const crypto::CipherSuite& suite) {
  const auto [a, b] = edge;
  const std::set<keying::KeyId> learned_by_b =
      keying::discover_shared_keys(rings[b], challenges[a], suite);
  const std::set<keying::KeyId> learned_by_a =
      keying::discover_shared_keys(rings[a], challenges[b], suite);
  LinkDiscovery out;
  out.shared.assign(learned_by_b.begin(), learned_by_b.end());
  out.symmetric = learned_by_a == learned_by_b;
  return out;
}

inline std::vector<std::uint32_t> sorted_ring(Rng& rng, std::size_t pool,
                                              std::size_t ring) {
  auto ids = rng.sample_distinct(static_cast<std::uint32_t>(pool),
                                 static_cast<std::uint32_t>(ring));
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::size_t overlap(const std::vector<std::uint32_t>& a,
                           const std::vector<std::uint32_t>& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

inline void check_ring_params(std::size_t pool, std::size_t ring) {
  if (ring > pool) throw ParameterError("ring size exceeds pool size");
}

inline bool graph_trial(std::size_t n, double p, std::uint64_t seed,
                        std::size_t trial) {
  return topology::is_connected(
      topology::generate_random_graph(n, p, graph_trial_seed(seed, trial)));
}

inline bool ring_pair_trial(std::size_t pool, std::size_t ring,
                            std::uint64_t seed, std::size_t trial,
                            std::size_t threshold) {
  Rng rng(derive_seed(seed, trial));
  const auto a = sorted_ring(rng, pool, ring);
  const auto b = sorted_ring(rng, pool, ring);
  return overlap(a, b) > threshold;
}

inline KeyGraphTrial key_graph_trial(std::size_t n, std::size_t pool,
                                     std::size_t ring, std::size_t threshold,
                                     std::uint64_t seed, std::size_t trial) {
  const std::uint64_t trial_seed = derive_seed(seed, trial);
  std::vector<std::vector<std::uint32_t>> rings(n);
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng(derive_seed(trial_seed, c));
    rings[c] = sorted_ring(rng, pool, ring);
  }
  topology::UnionFind uf(n);
  KeyGraphTrial out;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (overlap(rings[u], rings[v]) > threshold) {
        ++out.edges;
        uf.unite(u, v);
      }
    }
  }
  out.connected = n > 0 && uf.components() == 1;
  return out;
}

}  // namespace ppt::kernels::detail

#endif  // PPT_SRC_KERNELS_PER_ITEM_HPP_
