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

#ifndef PPT_CRYPTO_HPP_
#define PPT_CRYPTO_HPP_

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ppt/common.hpp"

namespace ppt::crypto {

inline constexpr std::size_t kKeyBytes = 16;
using SymmetricKey = std::array<std::uint8_t, kKeyBytes>;

SymmetricKey xor_keys(const SymmetricKey& a, const SymmetricKey& b);

struct SigningKeyPair {
  Bytes secret_key;
  Bytes public_key;
};

// Decryptor bound to one key, for trying many ciphertexts under it without
// repeating the key setup.
class KeyedOpener {
 public:
  virtual ~KeyedOpener() = default;
  // nullopt where CipherSuite::open would throw AuthenticationError.
  virtual std::optional<Bytes> try_open(ByteView ciphertext) = 0;
};

// Symmetric authenticated encryption plus signatures. Implementations must be
// stateless and callable concurrently.
class CipherSuite {
 public:
  virtual ~CipherSuite() = default;

  virtual std::string_view name() const = 0;

  // Deterministic authenticated encryption: equal (key, plaintext) pairs give
  // equal ciphertexts, distinct plaintexts get distinct nonces.
  virtual Bytes seal(const SymmetricKey& key, ByteView plaintext) const = 0;
  // Throws AuthenticationError on a wrong key or any modification.
  virtual Bytes open(const SymmetricKey& key, ByteView ciphertext) const = 0;
  // Defaults to calling open() per ciphertext.
  virtual std::unique_ptr<KeyedOpener> opener(const SymmetricKey& key) const;

  // Deterministic keypair from a 64-bit seed.
  virtual SigningKeyPair signing_keypair(std::uint64_t seed) const = 0;
  virtual Bytes sign(ByteView secret_key, ByteView message) const = 0;
  virtual bool verify(ByteView public_key, ByteView message,
                      ByteView signature) const = 0;
};

// AES-128-GCM with a synthetic IV (HMAC-SHA256 of the plaintext under the
// key, truncated to 96 bits) and Ed25519 signatures, both via OpenSSL.
// Ciphertext layout: iv(12) || body || tag(16).
class AesGcmEd25519Suite final : public CipherSuite {
 public:
  std::string_view name() const override { return "aes128gcm-ed25519"; }
  Bytes seal(const SymmetricKey& key, ByteView plaintext) const override;
  Bytes open(const SymmetricKey& key, ByteView ciphertext) const override;
  std::unique_ptr<KeyedOpener> opener(const SymmetricKey& key) const override;
  SigningKeyPair signing_keypair(std::uint64_t seed) const override;
  Bytes sign(ByteView secret_key, ByteView message) const override;
  bool verify(ByteView public_key, ByteView message,
              ByteView signature) const override;
};

// Cheap, NOT secure stand-in for protocol-logic tests. Still keyed and
// authenticated, so a wrong key or a flipped bit is detected: body is the
// plaintext XORed with a splitmix keystream, followed by a 64-bit keyed
// checksum. Signatures are a keyed checksum with public key == secret key.
class LightweightSuite final : public CipherSuite {
 public:
  std::string_view name() const override { return "lightweight"; }
  Bytes seal(const SymmetricKey& key, ByteView plaintext) const override;
  Bytes open(const SymmetricKey& key, ByteView ciphertext) const override;
  std::unique_ptr<KeyedOpener> opener(const SymmetricKey& key) const override;
  SigningKeyPair signing_keypair(std::uint64_t seed) const override;
  Bytes sign(ByteView secret_key, ByteView message) const override;
  bool verify(ByteView public_key, ByteView message,
              ByteView signature) const override;
};

// Decorator that counts primitive invocations.
class CountingSuite final : public CipherSuite {
 public:
  explicit CountingSuite(const CipherSuite& inner) : inner_(inner) {}

  std::string_view name() const override { return inner_.name(); }
  Bytes seal(const SymmetricKey& key, ByteView plaintext) const override;
  Bytes open(const SymmetricKey& key, ByteView ciphertext) const override;
  // Counts every try_open as one open.
  std::unique_ptr<KeyedOpener> opener(const SymmetricKey& key) const override;
  SigningKeyPair signing_keypair(std::uint64_t seed) const override {
    return inner_.signing_keypair(seed);
  }
  Bytes sign(ByteView secret_key, ByteView message) const override;
  bool verify(ByteView public_key, ByteView message,
              ByteView signature) const override;

  std::uint64_t seals() const { return seals_.load(); }
  std::uint64_t opens() const { return opens_.load(); }
  std::uint64_t signs() const { return signs_.load(); }
  std::uint64_t verifies() const { return verifies_.load(); }

 private:
  const CipherSuite& inner_;
  mutable std::atomic<std::uint64_t> seals_{0};
  mutable std::atomic<std::uint64_t> opens_{0};
  mutable std::atomic<std::uint64_t> signs_{0};
  mutable std::atomic<std::uint64_t> verifies_{0};
};

// Factory for the names accepted in scenario configs ("aes128gcm-ed25519",
// "lightweight").
std::unique_ptr<CipherSuite> make_suite(std::string_view name);

// Signed transport unit. The signature covers ciphertext || timestamp(u64 LE).
struct SignedEnvelope {
  ClientId sender = 0;
  Tick timestamp = 0;
  Bytes ciphertext;
  Bytes signature;

  friend bool operator==(const SignedEnvelope&, const SignedEnvelope&) = default;
};

Bytes signed_message(ByteView ciphertext, Tick timestamp);

SignedEnvelope sign_envelope(const CipherSuite& suite, ClientId sender,
                             Bytes ciphertext, Tick timestamp,
                             ByteView secret_key);

// Throws ForgeryError when the signature does not verify under public_key and
// ReplayError when |now - timestamp| > freshness_window.
void verify_envelope(const CipherSuite& suite, const SignedEnvelope& envelope,
                     ByteView public_key, Tick now, Tick freshness_window);

// Wire format: sender u32 | timestamp u64 | ct_len u32 | ct | sig_len u16 |
// sig, all little-endian. decode_envelope rejects trailing bytes.
Bytes encode_envelope(const SignedEnvelope& envelope);
SignedEnvelope decode_envelope(ByteView wire);

inline constexpr unsigned kDefaultNoiseGenerators = 4;

// Noise values are w-bit words stored in uint64.
struct NoiseVector {
  std::vector<std::uint64_t> values;
  unsigned generator = 0;
  std::uint64_t seed = 0;
  unsigned width_bits = 32;
};

// Uniform noise over [0, 2^width_bits) from one of the built-in generator
// families: 0 mt19937, 1 mt19937_64, 2 ranlux48, 3 splitmix64.
NoiseVector generate_noise(std::size_t dim, unsigned generator,
                           std::uint64_t seed, unsigned width_bits = 32);

}  // namespace ppt::crypto

#endif  // PPT_CRYPTO_HPP_
