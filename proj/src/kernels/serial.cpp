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

// Serial reference kernels.

#include "per_item.hpp"

namespace ppt::kernels {

std::uint64_t graph_trial_seed(std::uint64_t seed, std::size_t trial) {
  return derive_seed(seed ^ 0x47524150480000ull, trial);
}

namespace serial {

std::vector<LinkDiscovery> discover_links(
    std::span<const topology::Edge> edges,
    std::span<const keying::KeyRing> rings,
    std::span<const std::vector<keying::Challenge>> challenges,
    const crypto::CipherSuite& suite) {
  std::vector<LinkDiscovery> out;
  out.reserve(edges.size());
  for (const auto& e : edges) {
    out.push_back(detail::discover_one(e, rings, challenges, suite));
  }
  return out;
}

double connected_fraction(std::size_t n, double p, std::size_t trials,
                          std::uint64_t seed) {
  if (trials == 0) throw ParameterError("trials must be positive");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) hits += detail::graph_trial(n, p, seed, t);
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double ring_overlap_frequency(std::size_t pool_size, std::size_t ring_size,
                              std::size_t trials, std::uint64_t seed,
                              std::size_t threshold) {
  if (trials == 0) throw ParameterError("trials must be positive");
  detail::check_ring_params(pool_size, ring_size);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    hits += detail::ring_pair_trial(pool_size, ring_size, seed, t, threshold);
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

std::vector<KeyGraphTrial> key_graph_trials(std::size_t n,
                                            std::size_t pool_size,
                                            std::size_t ring_size,
                                            std::size_t threshold,
                                            std::size_t trials,
                                            std::uint64_t seed) {
  detail::check_ring_params(pool_size, ring_size);
  std::vector<KeyGraphTrial> out(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    out[t] = detail::key_graph_trial(n, pool_size, ring_size, threshold, seed, t);
  }
  return out;
}

std::vector<model::ParameterVector> train_clients(
    const model::SyntheticTask& task, std::span<const ClientId> clients,
    const model::ParameterVector& global, std::size_t epochs, double lr) {
  std::vector<model::ParameterVector> out;
  out.reserve(clients.size());
  for (ClientId c : clients) {
    out.push_back(model::train_local(task, c, global, epochs, lr));
  }
  return out;
}

model::ParameterVector sum_vectors(
    std::span<const model::ParameterVector> vectors) {
  if (vectors.empty()) throw ParameterError("nothing to sum");
  model::ParameterVector acc = vectors.front();
  for (std::size_t i = 1; i < vectors.size(); ++i) acc += vectors[i];
  return acc;
}

}  // namespace serial
}  // namespace ppt::kernels
