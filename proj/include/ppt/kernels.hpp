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

// Data-parallel kernels. Each kernel has a serial reference in
// ppt::kernels::serial and an OpenMP version in ppt::kernels::omp with the same
// signature. Randomised kernels derive one seed per trial, so both versions
// return bit-identical results regardless of thread count.

#ifndef PPT_KERNELS_HPP_
#define PPT_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ppt/crypto.hpp"
#include "ppt/keying.hpp"
#include "ppt/model.hpp"
#include "ppt/topology.hpp"

namespace ppt::kernels {

struct LinkDiscovery {
  std::vector<keying::KeyId> shared;  // ascending
  bool symmetric = true;  // both directions discovered the same set
};

struct KeyGraphTrial {
  bool connected = false;
  std::size_t edges = 0;
};

// discover_links: shared-key discovery on every edge, in both directions.
//   challenges[c] holds client c's broadcast challenges.
// connected_fraction: fraction of `trials` sampled G(n, p) graphs that are
//   connected.
// ring_overlap_frequency: fraction of independently drawn ring pairs sharing
//   more than `threshold` keys.
// key_graph_trials: n rings per trial, edge iff more than `threshold` shared
//   ids.
// train_clients: local SGD for every listed client from the same global model.
// sum_vectors: component-wise modular sum of equally shaped vectors.

namespace serial {
std::vector<LinkDiscovery> discover_links(
    std::span<const topology::Edge> edges,
    std::span<const keying::KeyRing> rings,
    std::span<const std::vector<keying::Challenge>> challenges,
    const crypto::CipherSuite& suite);
double connected_fraction(std::size_t n, double p, std::size_t trials,
                          std::uint64_t seed);
double ring_overlap_frequency(std::size_t pool_size, std::size_t ring_size,
                              std::size_t trials, std::uint64_t seed,
                              std::size_t threshold);
std::vector<KeyGraphTrial> key_graph_trials(std::size_t n,
                                            std::size_t pool_size,
                                            std::size_t ring_size,
                                            std::size_t threshold,
                                            std::size_t trials,
                                            std::uint64_t seed);
std::vector<model::ParameterVector> train_clients(
    const model::SyntheticTask& task, std::span<const ClientId> clients,
    const model::ParameterVector& global, std::size_t epochs, double lr);
model::ParameterVector sum_vectors(
    std::span<const model::ParameterVector> vectors);
}  // namespace serial

namespace omp {
std::vector<LinkDiscovery> discover_links(
    std::span<const topology::Edge> edges,
    std::span<const keying::KeyRing> rings,
    std::span<const std::vector<keying::Challenge>> challenges,
    const crypto::CipherSuite& suite);
double connected_fraction(std::size_t n, double p, std::size_t trials,
                          std::uint64_t seed);
double ring_overlap_frequency(std::size_t pool_size, std::size_t ring_size,
                              std::size_t trials, std::uint64_t seed,
                              std::size_t threshold);
std::vector<KeyGraphTrial> key_graph_trials(std::size_t n,
                                            std::size_t pool_size,
                                            std::size_t ring_size,
                                            std::size_t threshold,
                                            std::size_t trials,
                                            std::uint64_t seed);
std::vector<model::ParameterVector> train_clients(
    const model::SyntheticTask& task, std::span<const ClientId> clients,
    const model::ParameterVector& global, std::size_t epochs, double lr);
model::ParameterVector sum_vectors(
    std::span<const model::ParameterVector> vectors);
}  // namespace omp

// Per-trial seed for G(n, p) sampling.
std::uint64_t graph_trial_seed(std::uint64_t seed, std::size_t trial);

}  // namespace ppt::kernels

#endif  // PPT_KERNELS_HPP_
