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

// Model-update arithmetic. Every value is a two's-complement fixed-point word
// of `width_bits` bits with `frac_bits` fractional bits; sums wrap modulo
// 2^width_bits so a uniform mask added before aggregation cancels exactly.

#ifndef PPT_MODEL_HPP_
#define PPT_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ppt/common.hpp"
#include "ppt/crypto.hpp"

namespace ppt::model {

struct FixedPointFormat {
  std::uint8_t width_bits = 32;
  std::uint8_t frac_bits = 16;

  // Width must be a multiple of 8 in [8, 64] and frac_bits < width_bits.
  void validate() const;
  std::uint64_t mask() const {
    return width_bits == 64 ? ~0ull : (1ull << width_bits) - 1;
  }
  std::int64_t scale() const { return std::int64_t{1} << frac_bits; }
  // Exclusive bound on true magnitudes: 2^(width_bits - 1).
  unsigned __int128 headroom() const {
    return static_cast<unsigned __int128>(1) << (width_bits - 1);
  }

  friend bool operator==(const FixedPointFormat&,
                         const FixedPointFormat&) = default;
};

// Integer division rounded to nearest, ties to even. den must be positive.
__int128 div_round_half_even(__int128 num, __int128 den);

class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(FixedPointFormat format, std::vector<std::uint64_t> raw);

  static ParameterVector zeros(std::size_t dim, FixedPointFormat format = {});
  // Round-half-even quantisation of real values.
  static ParameterVector from_real(std::span<const double> values,
                                   FixedPointFormat format = {});
  // Raw words from signed fixed-point integers.
  static ParameterVector from_signed(std::span<const std::int64_t> values,
                                     FixedPointFormat format = {});

  std::size_t dim() const { return raw_.size(); }
  const FixedPointFormat& format() const { return format_; }
  std::span<const std::uint64_t> raw() const { return raw_; }
  std::uint64_t raw_at(std::size_t i) const { return raw_.at(i); }
  std::int64_t signed_at(std::size_t i) const;
  std::vector<std::int64_t> to_signed() const;
  std::vector<double> to_real() const;

  ParameterVector& operator+=(const ParameterVector& other);
  ParameterVector& operator-=(const ParameterVector& other);
  friend ParameterVector operator+(ParameterVector a, const ParameterVector& b) {
    return a += b;
  }
  friend ParameterVector operator-(ParameterVector a, const ParameterVector& b) {
    return a -= b;
  }
  friend bool operator==(const ParameterVector&,
                         const ParameterVector&) = default;

 private:
  void require_same_shape(const ParameterVector& other) const;

  FixedPointFormat format_;
  std::vector<std::uint64_t> raw_;
};

// dim u32 | width u8 | frac u8 | values as width-bit little-endian words.
Bytes serialize(const ParameterVector& v);
ParameterVector deserialize(ByteView bytes);

// Packed (weight * update, weight): dim + 1 words, the weight last.
struct EncodedUpdate {
  ParameterVector packed;

  std::size_t dim() const { return packed.dim() - 1; }
  ParameterVector weighted() const;
  std::uint64_t weight_raw() const { return packed.raw_at(packed.dim() - 1); }

  friend bool operator==(const EncodedUpdate&, const EncodedUpdate&) = default;
};

struct DecodedUpdate {
  ParameterVector weighted;
  std::uint64_t weight_raw = 0;
  double weight() const;
};

// x_i = m_i - M, component-wise modular. Throws ShapeError on mismatch.
ParameterVector local_update(const ParameterVector& local,
                             const ParameterVector& global);

// weighted_j = round_half_even(x_j * w_fp / 2^frac). Throws ParameterError for
// negative or non-finite weights and OverflowError if a weighted value or the
// weight leaves the signed range.
EncodedUpdate encode(const ParameterVector& update, double weight);
DecodedUpdate decode(const EncodedUpdate& encoded);

// Component-wise modular sum including the weight slot.
EncodedUpdate aggregate(std::span<const EncodedUpdate> updates);

// Throws OverflowError if the exact (non-wrapping) sum of any component,
// weight included, reaches 2^(width-1) in magnitude.
void check_headroom(std::span<const EncodedUpdate> updates);

// M_next = round_half_even(sum(w x) * 2^frac / sum(w)) + M. Throws
// DegenerateRoundError when the weight sum is zero (or negative when read as a
// signed word).
ParameterVector global_update(const EncodedUpdate& aggregated,
                              const ParameterVector& global);

// Plain weighted averaging of local models with integer weights:
// round_half_even(sum(w_i m_i) / sum(w_i)). Used as the reference path.
ParameterVector fedavg_reference(std::span<const ParameterVector> locals,
                                 std::span<const std::uint64_t> weights);

// Add / remove a w-bit mask over every packed slot. Throws ShapeError when
// the mask dimension or width differs from the update.
EncodedUpdate apply_mask(const EncodedUpdate& update,
                         const crypto::NoiseVector& noise);
EncodedUpdate remove_mask(const EncodedUpdate& update,
                          const crypto::NoiseVector& noise);

struct SyntheticTaskConfig {
  std::size_t clients = 100;
  std::size_t dim = 4;         // 2..8
  std::size_t min_samples = 4;
  std::size_t max_samples = 60;
  double skew = 3.0;           // count = min + (max-min) * u^skew
  double label_noise = 0.01;
  std::uint64_t seed = 1;
};

// Least-squares regression split across clients with skewed sample counts.
class SyntheticTask {
 public:
  explicit SyntheticTask(const SyntheticTaskConfig& config);

  std::size_t clients() const { return features_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t sample_count(ClientId client) const;
  const std::vector<double>& true_weights() const { return true_weights_; }

  // Mean of 0.5 * (x.w - y)^2 over the client's samples / the pooled data.
  double client_loss(ClientId client, std::span<const double> weights) const;
  double pooled_loss(std::span<const double> weights) const;
  // Normal-equation solution on the pooled data.
  std::vector<double> pooled_optimum() const;

  std::span<const double> features(ClientId client, std::size_t sample) const;
  double label(ClientId client, std::size_t sample) const;

 private:
  std::size_t dim_;
  std::vector<double> true_weights_;
  std::vector<std::vector<double>> features_;  // row-major per client
  std::vector<std::vector<double>> labels_;
};

// `epochs` in-order SGD passes on the client's samples starting from `global`,
// quantised back to the global model's format. A client without samples
// returns `global` unchanged.
ParameterVector train_local(const SyntheticTask& task, ClientId client,
                            const ParameterVector& global, std::size_t epochs,
                            double learning_rate);

}  // namespace ppt::model

#endif  // PPT_MODEL_HPP_
