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

#include "ppt/model.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "ppt/rng.hpp"

namespace ppt::model {
namespace {

using i128 = __int128;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

void require_in_range(i128 v, const FixedPointFormat& fmt, const char* what) {
  if (abs128(v) >= static_cast<i128>(fmt.headroom())) {
    throw OverflowError(std::string(what) + " exceeds " +
                        std::to_string(fmt.width_bits) + "-bit signed range");
  }
}

std::uint64_t wrap(i128 v, const FixedPointFormat& fmt) {
  return static_cast<std::uint64_t>(v) & fmt.mask();
}

i128 quantize(double v, const FixedPointFormat& fmt) {
  if (!std::isfinite(v)) throw ParameterError("non-finite value");
  // nearbyint honours the default round-to-nearest-even mode.
  const double scaled = std::nearbyint(std::ldexp(v, fmt.frac_bits));
  if (std::fabs(scaled) >= std::ldexp(1.0, fmt.width_bits - 1)) {
    throw OverflowError("value " + std::to_string(v) + " out of range");
  }
  return static_cast<i128>(static_cast<std::int64_t>(scaled));
}

std::int64_t sign_extend(std::uint64_t raw, unsigned width) {
  if (width == 64) return static_cast<std::int64_t>(raw);
  const std::uint64_t sign = 1ull << (width - 1);
  return static_cast<std::int64_t>((raw ^ sign) - sign);
}

void require_same_packed_shape(const EncodedUpdate& a, const EncodedUpdate& b) {
  if (a.packed.dim() != b.packed.dim() ||
      !(a.packed.format() == b.packed.format())) {
    throw ShapeError("encoded updates differ in shape");
  }
}

}  // namespace

void FixedPointFormat::validate() const {
  if (width_bits < 8 || width_bits > 64 || width_bits % 8 != 0) {
    throw ParameterError("width_bits must be a multiple of 8 in [8, 64]");
  }
  if (frac_bits >= width_bits) {
    throw ParameterError("frac_bits must be below width_bits");
  }
}

i128 div_round_half_even(i128 num, i128 den) {
  if (den <= 0) throw ParameterError("divisor must be positive");
  i128 q = num / den;
  i128 r = num % den;
  if (r < 0) {
    q -= 1;
    r += den;
  }
  const i128 twice = 2 * r;
  if (twice > den || (twice == den && (q & 1) != 0)) q += 1;
  return q;
}

ParameterVector::ParameterVector(FixedPointFormat format,
                                 std::vector<std::uint64_t> raw)
    : format_(format), raw_(std::move(raw)) {
  format_.validate();
  for (auto& v : raw_) v &= format_.mask();
}

ParameterVector ParameterVector::zeros(std::size_t dim,
                                       FixedPointFormat format) {
  return ParameterVector(format, std::vector<std::uint64_t>(dim, 0));
}

ParameterVector ParameterVector::from_real(std::span<const double> values,
                                           FixedPointFormat format) {
  format.validate();
  std::vector<std::uint64_t> raw;
  raw.reserve(values.size());
  for (double v : values) raw.push_back(wrap(quantize(v, format), format));
  return ParameterVector(format, std::move(raw));
}

ParameterVector ParameterVector::from_signed(
    std::span<const std::int64_t> values, FixedPointFormat format) {
  format.validate();
  std::vector<std::uint64_t> raw;
  raw.reserve(values.size());
  for (std::int64_t v : values) {
    require_in_range(v, format, "fixed-point value");
    raw.push_back(wrap(v, format));
  }
  return ParameterVector(format, std::move(raw));
}

std::int64_t ParameterVector::signed_at(std::size_t i) const {
  return sign_extend(raw_.at(i), format_.width_bits);
}

std::vector<std::int64_t> ParameterVector::to_signed() const {
  std::vector<std::int64_t> out(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) out[i] = signed_at(i);
  return out;
}

std::vector<double> ParameterVector::to_real() const {
  std::vector<double> out(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    out[i] = std::ldexp(static_cast<double>(signed_at(i)),
                        -static_cast<int>(format_.frac_bits));
  }
  return out;
}

void ParameterVector::require_same_shape(const ParameterVector& other) const {
  if (raw_.size() != other.raw_.size()) {
    throw ShapeError("dimension mismatch: " + std::to_string(raw_.size()) +
                     " vs " + std::to_string(other.raw_.size()));
  }
  if (!(format_ == other.format_)) throw ShapeError("fixed-point format mismatch");
}

ParameterVector& ParameterVector::operator+=(const ParameterVector& other) {
  require_same_shape(other);
  const std::uint64_t m = format_.mask();
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    raw_[i] = (raw_[i] + other.raw_[i]) & m;
  }
  return *this;
}

ParameterVector& ParameterVector::operator-=(const ParameterVector& other) {
  require_same_shape(other);
  const std::uint64_t m = format_.mask();
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    raw_[i] = (raw_[i] - other.raw_[i]) & m;
  }
  return *this;
}

Bytes serialize(const ParameterVector& v) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(v.dim()));
  w.u8(v.format().width_bits);
  w.u8(v.format().frac_bits);
  const std::size_t width = v.format().width_bits / 8;
  for (std::uint64_t x : v.raw()) w.uint_le(x, width);
  return std::move(w).take();
}

ParameterVector deserialize(ByteView bytes) {
  ByteReader r(bytes);
  const std::uint32_t dim = r.u32();
  FixedPointFormat fmt{r.u8(), r.u8()};
  try {
    fmt.validate();
  } catch (const ParameterError& e) {
    throw DecodeError(std::string("bad fixed-point header: ") + e.what());
  }
  const std::size_t width = fmt.width_bits / 8;
  if (r.remaining() != static_cast<std::size_t>(dim) * width) {
    throw DecodeError("parameter vector length does not match header");
  }
  std::vector<std::uint64_t> raw(dim);
  for (auto& x : raw) x = r.uint_le(width);
  return ParameterVector(fmt, std::move(raw));
}

ParameterVector EncodedUpdate::weighted() const {
  auto raw = packed.raw();
  return ParameterVector(packed.format(),
                         std::vector<std::uint64_t>(raw.begin(), raw.end() - 1));
}

double DecodedUpdate::weight() const {
  const auto& f = weighted.format();
  return std::ldexp(static_cast<double>(sign_extend(weight_raw, f.width_bits)),
                    -static_cast<int>(f.frac_bits));
}

ParameterVector local_update(const ParameterVector& local,
                             const ParameterVector& global) {
  return local - global;
}

EncodedUpdate encode(const ParameterVector& update, double weight) {
  if (!std::isfinite(weight) || weight < 0) {
    throw ParameterError("weight must be a non-negative finite number");
  }
  const FixedPointFormat& fmt = update.format();
  const i128 w_fp = quantize(weight, fmt);
  std::vector<std::uint64_t> raw;
  raw.reserve(update.dim() + 1);
  for (std::size_t i = 0; i < update.dim(); ++i) {
    const i128 product = static_cast<i128>(update.signed_at(i)) * w_fp;
    const i128 scaled = div_round_half_even(product, fmt.scale());
    require_in_range(scaled, fmt, "weighted update");
    raw.push_back(wrap(scaled, fmt));
  }
  raw.push_back(wrap(w_fp, fmt));
  return EncodedUpdate{ParameterVector(fmt, std::move(raw))};
}

DecodedUpdate decode(const EncodedUpdate& encoded) {
  if (encoded.packed.dim() == 0) throw DecodeError("empty encoded update");
  return DecodedUpdate{encoded.weighted(), encoded.weight_raw()};
}

EncodedUpdate aggregate(std::span<const EncodedUpdate> updates) {
  if (updates.empty()) throw ParameterError("nothing to aggregate");
  EncodedUpdate sum = updates.front();
  for (std::size_t i = 1; i < updates.size(); ++i) {
    require_same_packed_shape(sum, updates[i]);
    sum.packed += updates[i].packed;
  }
  return sum;
}

void check_headroom(std::span<const EncodedUpdate> updates) {
  if (updates.empty()) return;
  const auto& first = updates.front().packed;
  std::vector<i128> sums(first.dim(), 0);
  for (const auto& u : updates) {
    require_same_packed_shape(updates.front(), u);
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += u.packed.signed_at(i);
  }
  for (i128 s : sums) require_in_range(s, first.format(), "aggregate component");
}

ParameterVector global_update(const EncodedUpdate& aggregated,
                              const ParameterVector& global) {
  const FixedPointFormat& fmt = global.format();
  if (aggregated.packed.dim() != global.dim() + 1 ||
      !(aggregated.packed.format() == fmt)) {
    throw ShapeError("aggregate does not match the global model");
  }
  const std::int64_t total = aggregated.packed.signed_at(global.dim());
  if (total <= 0) throw DegenerateRoundError("total weight is not positive");
  std::vector<std::int64_t> delta(global.dim());
  for (std::size_t i = 0; i < global.dim(); ++i) {
    const i128 num = static_cast<i128>(aggregated.packed.signed_at(i)) * fmt.scale();
    delta[i] = static_cast<std::int64_t>(div_round_half_even(num, total));
  }
  return ParameterVector::from_signed(delta, fmt) + global;
}

ParameterVector fedavg_reference(std::span<const ParameterVector> locals,
                                 std::span<const std::uint64_t> weights) {
  if (locals.size() != weights.size()) {
    throw ShapeError("one weight per local model required");
  }
  if (locals.empty()) throw DegenerateRoundError("no local models");
  const std::size_t dim = locals.front().dim();
  const FixedPointFormat fmt = locals.front().format();
  std::vector<i128> num(dim, 0);
  i128 den = 0;
  for (std::size_t k = 0; k < locals.size(); ++k) {
    if (locals[k].dim() != dim || !(locals[k].format() == fmt)) {
      throw ShapeError("local models differ in shape");
    }
    den += weights[k];
    for (std::size_t i = 0; i < dim; ++i) {
      num[i] += static_cast<i128>(locals[k].signed_at(i)) * weights[k];
    }
  }
  if (den == 0) throw DegenerateRoundError("total weight is zero");
  std::vector<std::int64_t> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = static_cast<std::int64_t>(div_round_half_even(num[i], den));
  }
  return ParameterVector::from_signed(out, fmt);
}

namespace {

ParameterVector noise_as_vector(const EncodedUpdate& update,
                                const crypto::NoiseVector& noise) {
  if (noise.values.size() != update.packed.dim() ||
      noise.width_bits != update.packed.format().width_bits) {
    throw ShapeError("noise does not match the encoded update");
  }
  return ParameterVector(update.packed.format(), noise.values);
}

}  // namespace

EncodedUpdate apply_mask(const EncodedUpdate& update,
                         const crypto::NoiseVector& noise) {
  return EncodedUpdate{update.packed + noise_as_vector(update, noise)};
}

EncodedUpdate remove_mask(const EncodedUpdate& update,
                          const crypto::NoiseVector& noise) {
  return EncodedUpdate{update.packed - noise_as_vector(update, noise)};
}

// ---- synthetic least-squares task ----

SyntheticTask::SyntheticTask(const SyntheticTaskConfig& config)
    : dim_(config.dim) {
  if (config.dim < 2 || config.dim > 8) throw ParameterError("dim must be in [2, 8]");
  if (config.clients == 0) throw ParameterError("need at least one client");
  if (config.min_samples > config.max_samples) {
    throw ParameterError("min_samples exceeds max_samples");
  }
  if (!(config.skew > 0)) throw ParameterError("skew must be positive");

  Rng truth(derive_seed(config.seed, 0));
  true_weights_.resize(dim_);
  for (auto& w : true_weights_) w = truth.normal();

  features_.resize(config.clients);
  labels_.resize(config.clients);
  const std::size_t span = config.max_samples - config.min_samples;
  for (std::size_t c = 0; c < config.clients; ++c) {
    Rng rng(derive_seed(config.seed, 100 + c));
    const double u = std::pow(rng.unit(), config.skew);
    std::size_t count =
        config.min_samples + static_cast<std::size_t>(u * static_cast<double>(span + 1));
    if (count > config.max_samples) count = config.max_samples;
    features_[c].resize(count * dim_);
    labels_[c].resize(count);
    for (std::size_t s = 0; s < count; ++s) {
      double y = 0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double x = rng.normal();
        features_[c][s * dim_ + j] = x;
        y += x * true_weights_[j];
      }
      labels_[c][s] = y + config.label_noise * rng.normal();
    }
  }
}

std::size_t SyntheticTask::sample_count(ClientId client) const {
  return labels_.at(client).size();
}

std::span<const double> SyntheticTask::features(ClientId client,
                                                std::size_t sample) const {
  return std::span<const double>(features_.at(client)).subspan(sample * dim_, dim_);
}

double SyntheticTask::label(ClientId client, std::size_t sample) const {
  return labels_.at(client).at(sample);
}

double SyntheticTask::client_loss(ClientId client,
                                  std::span<const double> weights) const {
  if (weights.size() != dim_) throw ShapeError("weight dimension mismatch");
  const std::size_t n = sample_count(client);
  if (n == 0) return 0.0;
  double total = 0;
  for (std::size_t s = 0; s < n; ++s) {
    auto x = features(client, s);
    double r = -label(client, s);
    for (std::size_t j = 0; j < dim_; ++j) r += x[j] * weights[j];
    total += 0.5 * r * r;
  }
  return total / static_cast<double>(n);
}

double SyntheticTask::pooled_loss(std::span<const double> weights) const {
  double total = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < clients(); ++c) {
    const std::size_t k = sample_count(static_cast<ClientId>(c));
    total += client_loss(static_cast<ClientId>(c), weights) * static_cast<double>(k);
    n += k;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

std::vector<double> SyntheticTask::pooled_optimum() const {
  // Normal equations, Gaussian elimination with partial pivoting.
  std::vector<std::vector<double>> a(dim_, std::vector<double>(dim_ + 1, 0.0));
  for (std::size_t c = 0; c < clients(); ++c) {
    const auto id = static_cast<ClientId>(c);
    for (std::size_t s = 0; s < sample_count(id); ++s) {
      auto x = features(id, s);
      for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) a[i][j] += x[i] * x[j];
        a[i][dim_] += x[i] * label(id, s);
      }
    }
  }
  for (std::size_t col = 0; col < dim_; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim_; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) < 1e-12) throw DegenerateRoundError("singular design matrix");
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < dim_; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k <= dim_; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<double> w(dim_);
  for (std::size_t i = 0; i < dim_; ++i) w[i] = a[i][dim_] / a[i][i];
  return w;
}

ParameterVector train_local(const SyntheticTask& task, ClientId client,
                            const ParameterVector& global, std::size_t epochs,
                            double learning_rate) {
  if (global.dim() != task.dim()) throw ShapeError("model dimension mismatch");
  const std::size_t n = task.sample_count(client);
  if (n == 0) return global;
  std::vector<double> w = global.to_real();
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t s = 0; s < n; ++s) {
      auto x = task.features(client, s);
      double r = -task.label(client, s);
      for (std::size_t j = 0; j < w.size(); ++j) r += x[j] * w[j];
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= learning_rate * r * x[j];
    }
  }
  return ParameterVector::from_real(w, global.format());
}

}  // namespace ppt::model
