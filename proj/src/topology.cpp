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

#include "ppt/topology.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "ppt/rng.hpp"

namespace ppt::topology {

Graph::Graph(std::size_t node_count) : adjacency_(node_count) {}

void Graph::add_edge(ClientId u, ClientId v) {
  if (u == v) throw ParameterError("self-loop on node " + std::to_string(u));
  if (u >= node_count() || v >= node_count()) {
    throw ParameterError("edge references node outside the graph");
  }
  auto& au = adjacency_[u];
  auto it = std::lower_bound(au.begin(), au.end(), v);
  if (it != au.end() && *it == v) return;
  au.insert(it, v);
  auto& av = adjacency_[v];
  av.insert(std::lower_bound(av.begin(), av.end(), u), u);
  ++edge_count_;
}

void Graph::remove_edge(ClientId u, ClientId v) {
  if (!has_edge(u, v)) return;
  auto& au = adjacency_[u];
  au.erase(std::lower_bound(au.begin(), au.end(), v));
  auto& av = adjacency_[v];
  av.erase(std::lower_bound(av.begin(), av.end(), u));
  --edge_count_;
}

bool Graph::has_edge(ClientId u, ClientId v) const {
  if (u >= node_count() || v >= node_count()) return false;
  const auto& au = adjacency_[u];
  return std::binary_search(au.begin(), au.end(), v);
}

std::span<const ClientId> Graph::neighbors(ClientId u) const {
  if (u >= node_count()) throw ParameterError("node outside the graph");
  return adjacency_[u];
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (ClientId u = 0; u < node_count(); ++u) {
    for (ClientId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --components_;
  return true;
}

void ConnectivityParams::validate() const {
  if (pool_size == 0 || ring_size == 0) {
    throw ParameterError("pool and ring sizes must be positive");
  }
  if (2 * ring_size > pool_size) {
    throw ParameterError("ring size must satisfy 2l <= pool size");
  }
  if (!(desired_connectivity > 0.0 && desired_connectivity < 1.0)) {
    throw ParameterError("desired connectivity must lie in (0, 1)");
  }
}

Graph generate_random_graph(std::size_t n, double p, std::uint64_t seed) {
  if (n < 2) throw ParameterError("random graph needs at least 2 nodes");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("edge probability must lie in [0, 1]");
  }
  Graph g(n);
  Rng rng(seed);
  for (ClientId u = 0; u < n; ++u) {
    for (ClientId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) g.add_edge(u, v);
    }
  }
  return g;
}

double connectivity_probability(double c) { return std::exp(-std::exp(-c)); }

double connectivity_constant(double target_pc) {
  if (!(target_pc > 0.0 && target_pc < 1.0)) {
    throw ParameterError("target connectivity must lie in (0, 1)");
  }
  return -std::log(-std::log(target_pc));
}

double threshold_edge_probability(std::size_t n, double target_pc) {
  if (n < 2) throw ParameterError("threshold needs at least 2 nodes");
  const double c = connectivity_constant(target_pc);
  const auto nd = static_cast<double>(n);
  return (std::log(nd) + c) / nd;
}

double shared_key_probability(std::size_t pool_size, std::size_t ring_size) {
  if (2 * ring_size > pool_size) {
    throw ParameterError("ring size must satisfy 2l <= pool size");
  }
  const auto eta = static_cast<double>(pool_size);
  const auto l = static_cast<double>(ring_size);
  // log prod (eta-l-i)/(eta-i) = sum log1p(-l/(eta-i))
  double log_disjoint = 0.0;
  for (std::size_t i = 0; i < ring_size; ++i) {
    log_disjoint += std::log1p(-l / (eta - static_cast<double>(i)));
  }
  return -std::expm1(log_disjoint);
}

bool is_connected(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n <= 1) return true;
  UnionFind uf(n);
  for (ClientId u = 0; u < n; ++u) {
    for (ClientId v : g.neighbors(u)) {
      if (u < v) uf.unite(u, v);
    }
  }
  return uf.components() == 1;
}

std::vector<ClientId> reachable_from(const Graph& g, ClientId source,
                                     const std::vector<bool>& allowed) {
  std::vector<ClientId> out;
  if (source >= g.node_count() || !allowed.at(source)) return out;
  std::vector<bool> seen(g.node_count(), false);
  std::vector<ClientId> frontier{source};
  seen[source] = true;
  while (!frontier.empty()) {
    const ClientId u = frontier.back();
    frontier.pop_back();
    out.push_back(u);
    for (ClientId v : g.neighbors(u)) {
      if (!seen[v] && allowed[v]) {
        seen[v] = true;
        frontier.push_back(v);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Graph induced_subgraph(const Graph& g, const std::vector<bool>& keep) {
  Graph out(g.node_count());
  for (const auto& [u, v] : g.edges()) {
    if (keep.at(u) && keep.at(v)) out.add_edge(u, v);
  }
  return out;
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "n=" << g.node_count() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("n=", 0) != 0) {
    throw DecodeError("edge list must start with 'n=<count>'");
  }
  std::size_t n = 0;
  try {
    n = std::stoul(line.substr(2));
  } catch (const std::exception&) {
    throw DecodeError("bad node count in edge list header");
  }
  Graph g(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long u = -1;
    long long v = -1;
    if (!(row >> u >> v) || u < 0 || v < 0) {
      throw DecodeError("bad edge line: " + line);
    }
    try {
      g.add_edge(static_cast<ClientId>(u), static_cast<ClientId>(v));
    } catch (const ParameterError& e) {
      throw DecodeError(e.what());
    }
  }
  return g;
}

}  // namespace ppt::topology
