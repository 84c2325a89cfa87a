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

// P2P overlay graphs and the random-graph connectivity math used to size the
// key pool and key ring.

#ifndef PPT_TOPOLOGY_HPP_
#define PPT_TOPOLOGY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ppt/common.hpp"

namespace ppt::topology {

using Edge = std::pair<ClientId, ClientId>;

// Simple undirected graph on nodes [0, node_count). Adjacency lists are kept
// sorted so neighbour iteration order is canonical.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count);

  // Adds {u, v}. Idempotent. Throws ParameterError on self-loops or ids out of
  // range.
  void add_edge(ClientId u, ClientId v);
  void remove_edge(ClientId u, ClientId v);
  bool has_edge(ClientId u, ClientId v) const;

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::span<const ClientId> neighbors(ClientId u) const;
  std::size_t degree(ClientId u) const { return neighbors(u).size(); }

  // All edges as (u, v) with u < v, lexicographically ordered.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::vector<ClientId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  std::size_t components() const { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t components_;
};

struct ConnectivityParams {
  std::size_t pool_size = 2000;
  std::size_t ring_size = 20;
  double desired_connectivity = 0.999;
  double c = 0.0;

  // Throws ParameterError unless 2l <= eta and 0 < P_c < 1.
  void validate() const;
};

// G(n, p): every unordered pair {u, v}, u < v, visited in lexicographic order,
// becomes an edge with probability p. Deterministic for a fixed seed.
Graph generate_random_graph(std::size_t n, double p, std::uint64_t seed);

// Limit probability that G(n, ln n / n + c / n) is connected: exp(-exp(-c)).
double connectivity_probability(double c);

// Inverse of connectivity_probability: the constant c that yields target_pc.
double connectivity_constant(double target_pc);

// Edge probability (ln n + c) / n achieving target_pc in the limit.
double threshold_edge_probability(std::size_t n, double target_pc);

// Probability that two rings of l distinct keys drawn from a pool of eta share
// at least one key: 1 - ((eta-l)!)^2 / ((eta-2l)! eta!), evaluated in log
// space as 1 - prod_{i<l} (eta-l-i)/(eta-i).
double shared_key_probability(std::size_t pool_size, std::size_t ring_size);

// True iff every node is reachable from node 0. Graphs with <= 1 node are
// connected.
bool is_connected(const Graph& g);

// Nodes reachable from `source` using only nodes with allowed[node] == true.
// The source itself must be allowed; returned ids are ascending.
std::vector<ClientId> reachable_from(const Graph& g, ClientId source,
                                     const std::vector<bool>& allowed);

// Subgraph on the same id space keeping only edges whose endpoints are both
// kept.
Graph induced_subgraph(const Graph& g, const std::vector<bool>& keep);

// Edge-list text format: header "n=<count>" then one "u v" line per edge.
void write_edge_list(std::ostream& out, const Graph& g);
Graph read_edge_list(std::istream& in);

}  // namespace ppt::topology

#endif  // PPT_TOPOLOGY_HPP_
