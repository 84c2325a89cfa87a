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

// OpenMP kernels. Results are written by index, so they match the serial
// versions exactly.

#include <omp.h>

#include <exception>
#include <mutex>

#include "per_item.hpp"

namespace ppt::kernels::omp {
namespace {

// Exceptions may not cross an OpenMP region; keep the first and rethrow.
class FirstError {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

std::vector<LinkDiscovery> discover_links(
    std::span<const topology::Edge> edges,
    std::span<const keying::KeyRing> rings,
    std::span<const std::vector<keying::Challenge>> challenges,
    const crypto::CipherSuite& suite) {
  std::vector<LinkDiscovery> out(edges.size());
  FirstError err;
  const auto count = static_cast<std::int64_t>(edges.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < count; ++i) {
    err.run([&] { out[i] = detail::discover_one(edges[i], rings, challenges, suite); });
  }
  err.rethrow();
  return out;
}

double connected_fraction(std::size_t n, double p, std::size_t trials,
                          std::uint64_t seed) {
  if (trials == 0) throw ParameterError("trials must be positive");
  // Surface parameter errors before entering the parallel region.
  if (n < 2 || !(p >= 0.0 && p <= 1.0)) {
    topology::generate_random_graph(n, p, seed);
  }
  std::int64_t hits = 0;
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : hits)
  for (std::int64_t t = 0; t < count; ++t) {
    hits += detail::graph_trial(n, p, seed, static_cast<std::size_t>(t));
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double ring_overlap_frequency(std::size_t pool_size, std::size_t ring_size,
                              std::size_t trials, std::uint64_t seed,
                              std::size_t threshold) {
  if (trials == 0) throw ParameterError("trials must be positive");
  detail::check_ring_params(pool_size, ring_size);
  std::int64_t hits = 0;
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::int64_t t = 0; t < count; ++t) {
    hits += detail::ring_pair_trial(pool_size, ring_size, seed,
                                    static_cast<std::size_t>(t), threshold);
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
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t t = 0; t < count; ++t) {
    out[t] = detail::key_graph_trial(n, pool_size, ring_size, threshold, seed,
                                     static_cast<std::size_t>(t));
  }
  return out;
}

std::vector<model::ParameterVector> train_clients(
    const model::SyntheticTask& task, std::span<const ClientId> clients,
    const model::ParameterVector& global, std::size_t epochs, double lr) {
  std::vector<model::ParameterVector> out(clients.size());
  FirstError err;
  const auto count = static_cast<std::int64_t>(clients.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < count; ++i) {
    err.run([&] { out[i] = model::train_local(task, clients[i], global, epochs, lr); });
  }
  err.rethrow();
  return out;
}

model::ParameterVector sum_vectors(
    std::span<const model::ParameterVector> vectors) {
  if (vectors.empty()) throw ParameterError("nothing to sum");
  const auto& first = vectors.front();
  for (const auto& v : vectors) {
    if (v.dim() != first.dim() || !(v.format() == first.format())) {
      throw ShapeError("vectors differ in shape");
    }
  }
  // Modular addition is associative and commutative, so per-thread partial
  // sums combine to the serial result.
  const std::size_t dim = first.dim();
  const std::uint64_t mask = first.format().mask();
  std::vector<std::uint64_t> total(dim, 0);
  std::mutex mu;
  const auto count = static_cast<std::int64_t>(vectors.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(dim, 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < count; ++i) {
      auto raw = vectors[i].raw();
      for (std::size_t j = 0; j < dim; ++j) local[j] += raw[j];
    }
    std::lock_guard<std::mutex> lock(mu);
    for (std::size_t j = 0; j < dim; ++j) total[j] += local[j];
  }
  for (auto& v : total) v &= mask;
  return model::ParameterVector(first.format(), std::move(total));
}

}  // namespace ppt::kernels::omp
