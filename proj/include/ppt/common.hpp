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

#ifndef PPT_COMMON_HPP_
#define PPT_COMMON_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ppt {

using ClientId = std::uint32_t;
using Tick = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Reserved id for the aggregator/coordinator.
inline constexpr ClientId kServerId = 0xFFFFFFFFu;

// Error hierarchy. Every failure the library reports derives from ppt::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class AuthenticationError : public Error {
 public:
  using Error::Error;
};

class ForgeryError : public Error {
 public:
  using Error::Error;
};

class ReplayError : public Error {
 public:
  using Error::Error;
};

class InsufficientSharedKeysError : public Error {
 public:
  using Error::Error;
};

class PathKeyError : public Error {
 public:
  using Error::Error;
};

class KeyEstablishmentRequiredError : public Error {
 public:
  using Error::Error;
};

class DegenerateRoundError : public Error {
 public:
  using Error::Error;
};

class AbortRoundError : public Error {
 public:
  using Error::Error;
};

class AttackInfeasibleError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Little-endian append/read helpers used by every wire format in the project.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  // Writes the low `width` bytes of v.
  void uint_le(std::uint64_t v, std::size_t width) { put(v, width); }
  void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }

  Bytes take() && { return std::move(out_); }
  const Bytes& view() const { return out_; }

 private:
  void put(std::uint64_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::uint64_t uint_le(std::size_t width) { return get(width); }
  ByteView bytes(std::size_t n) {
    require(n);
    ByteView out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void require(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DecodeError("truncated input");
  }
  std::uint64_t get(std::size_t width) {
    require(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
std::string to_hex(ByteView data);
inline std::string sha256_hex(ByteView data) {
  Digest d = sha256(data);
  return to_hex(d);
}

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace ppt

#endif  // PPT_COMMON_HPP_
