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

#include "ppt/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstring>
#include <limits>
#include <memory>
#include <random>
#include <string>

#include "ppt/rng.hpp"

namespace ppt {

Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 failed");
  }
  return out;
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * data.size());
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

}  // namespace ppt

namespace ppt::crypto {
namespace {

constexpr std::size_t kIvBytes = 12;
constexpr std::size_t kTagBytes = 16;

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct PkeyDeleter {
  void operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

EVP_CIPHER_CTX* thread_cipher_ctx() {
  thread_local std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(
      EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  return ctx.get();
}

std::uint64_t load_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void store_u64(std::uint64_t v, std::uint8_t* p) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Keyed 64-bit checksum used by the lightweight suite.
std::uint64_t keyed_checksum(ByteView key, ByteView message,
                             std::uint64_t domain) {
  std::uint64_t h = splitmix64(domain ^ message.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    h = splitmix64(h ^ (static_cast<std::uint64_t>(key[i]) << (8 * (i % 8))));
  }
  for (std::size_t i = 0; i + 8 <= message.size(); i += 8) {
    h = splitmix64(h ^ load_u64(message.data() + i));
  }
  std::uint64_t tail = 0;
  const std::size_t rem = message.size() % 8;
  for (std::size_t i = 0; i < rem; ++i) {
    tail |= static_cast<std::uint64_t>(message[message.size() - rem + i])
            << (8 * i);
  }
  return splitmix64(h ^ tail ^ 0xA5A5A5A5A5A5A5A5ull);
}

}  // namespace

SymmetricKey xor_keys(const SymmetricKey& a, const SymmetricKey& b) {
  SymmetricKey out{};
  for (std::size_t i = 0; i < kKeyBytes; ++i) out[i] = a[i] ^ b[i];
  return out;
}

// ---------------------------------------------------------------------------
// AES-128-GCM / Ed25519

Bytes AesGcmEd25519Suite::seal(const SymmetricKey& key,
                               ByteView plaintext) const {
  std::uint8_t mac[EVP_MAX_MD_SIZE];
  unsigned int mac_len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
           plaintext.data(), plaintext.size(), mac, &mac_len) == nullptr) {
    throw Error("HMAC failed");
  }
  Bytes out(kIvBytes + plaintext.size() + kTagBytes);
  std::memcpy(out.data(), mac, kIvBytes);

  EVP_CIPHER_CTX* ctx = thread_cipher_ctx();
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, key.data(),
                               out.data()) == 1;
  if (ok && !plaintext.empty()) {
    ok = EVP_EncryptUpdate(ctx, out.data() + kIvBytes, &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
  }
  ok = ok && EVP_EncryptFinal_ex(ctx, out.data() + kIvBytes + len, &len) == 1;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG,
                                 static_cast<int>(kTagBytes),
                                 out.data() + kIvBytes + plaintext.size()) == 1;
  if (!ok) throw Error("AES-GCM encryption failed");
  return out;
}

namespace {

class DefaultOpener final : public KeyedOpener {
 public:
  DefaultOpener(const CipherSuite& suite, const SymmetricKey& key)
      : suite_(suite), key_(key) {}
  std::optional<Bytes> try_open(ByteView ciphertext) override {
    try {
      return suite_.open(key_, ciphertext);
    } catch (const AuthenticationError&) {
      return std::nullopt;
    }
  }

 private:
  const CipherSuite& suite_;
  SymmetricKey key_;
};

// Keeps one context with the key schedule in place; each try only resets the
// IV.
class AesGcmOpener final : public KeyedOpener {
 public:
  explicit AesGcmOpener(const SymmetricKey& key) : ctx_(EVP_CIPHER_CTX_new()) {
    if (!ctx_ || EVP_DecryptInit_ex(ctx_.get(), EVP_aes_128_gcm(), nullptr,
                                    key.data(), nullptr) != 1) {
      throw Error("AES-GCM key setup failed");
    }
  }

  std::optional<Bytes> try_open(ByteView ciphertext) override {
    if (ciphertext.size() < kIvBytes + kTagBytes) return std::nullopt;
    const std::size_t body = ciphertext.size() - kIvBytes - kTagBytes;
    Bytes out(body);
    EVP_CIPHER_CTX* ctx = ctx_.get();
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx, nullptr, nullptr, nullptr,
                                 ciphertext.data()) == 1;
    if (ok && body > 0) {
      ok = EVP_DecryptUpdate(ctx, out.data(), &len,
                             ciphertext.data() + kIvBytes,
                             static_cast<int>(body)) == 1;
    }
    auto* tag = const_cast<std::uint8_t*>(ciphertext.data() + kIvBytes + body);
    ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG,
                                   static_cast<int>(kTagBytes), tag) == 1;
    ok = ok && EVP_DecryptFinal_ex(ctx, out.data() + len, &len) == 1;
    if (!ok) return std::nullopt;
    return out;
  }

 private:
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx_;
};

class CountingOpener final : public KeyedOpener {
 public:
  CountingOpener(std::unique_ptr<KeyedOpener> inner,
                 std::atomic<std::uint64_t>& opens)
      : inner_(std::move(inner)), opens_(opens) {}
  std::optional<Bytes> try_open(ByteView ciphertext) override {
    ++opens_;
    return inner_->try_open(ciphertext);
  }

 private:
  std::unique_ptr<KeyedOpener> inner_;
  std::atomic<std::uint64_t>& opens_;
};

}  // namespace

std::unique_ptr<KeyedOpener> CipherSuite::opener(const SymmetricKey& key) const {
  return std::make_unique<DefaultOpener>(*this, key);
}

std::unique_ptr<KeyedOpener> AesGcmEd25519Suite::opener(
    const SymmetricKey& key) const {
  return std::make_unique<AesGcmOpener>(key);
}

std::unique_ptr<KeyedOpener> CountingSuite::opener(const SymmetricKey& key) const {
  return std::make_unique<CountingOpener>(inner_.opener(key), opens_);
}

Bytes AesGcmEd25519Suite::open(const SymmetricKey& key,
                               ByteView ciphertext) const {
  if (ciphertext.size() < kIvBytes + kTagBytes) {
    throw AuthenticationError("ciphertext shorter than iv + tag");
  }
  const std::size_t body = ciphertext.size() - kIvBytes - kTagBytes;
  Bytes out(body);
  EVP_CIPHER_CTX* ctx = thread_cipher_ctx();
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, key.data(),
                               ciphertext.data()) == 1;
  if (ok && body > 0) {
    ok = EVP_DecryptUpdate(ctx, out.data(), &len, ciphertext.data() + kIvBytes,
                           static_cast<int>(body)) == 1;
  }
  // The tag buffer is not modified for GET/SET_TAG on decrypt.
  auto* tag = const_cast<std::uint8_t*>(ciphertext.data() + kIvBytes + body);
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG,
                                 static_cast<int>(kTagBytes), tag) == 1;
  ok = ok && EVP_DecryptFinal_ex(ctx, out.data() + len, &len) == 1;
  if (!ok) throw AuthenticationError("AES-GCM authentication failed");
  return out;
}

SigningKeyPair AesGcmEd25519Suite::signing_keypair(std::uint64_t seed) const {
  ByteWriter w;
  w.bytes(as_bytes("ppt-ed25519-seed"));
  w.u64(seed);
  const Digest raw = sha256(w.view());
  std::unique_ptr<EVP_PKEY, PkeyDeleter> key(EVP_PKEY_new_raw_private_key(
      EVP_PKEY_ED25519, nullptr, raw.data(), raw.size()));
  if (!key) throw Error("Ed25519 key construction failed");
  SigningKeyPair pair;
  pair.secret_key.assign(raw.begin(), raw.end());
  std::size_t pub_len = 32;
  pair.public_key.resize(pub_len);
  if (EVP_PKEY_get_raw_public_key(key.get(), pair.public_key.data(),
                                  &pub_len) != 1) {
    throw Error("Ed25519 public key export failed");
  }
  pair.public_key.resize(pub_len);
  return pair;
}

Bytes AesGcmEd25519Suite::sign(ByteView secret_key, ByteView message) const {
  std::unique_ptr<EVP_PKEY, PkeyDeleter> key(EVP_PKEY_new_raw_private_key(
      EVP_PKEY_ED25519, nullptr, secret_key.data(), secret_key.size()));
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!key || !ctx) throw Error("Ed25519 signing setup failed");
  Bytes sig(64);
  std::size_t sig_len = sig.size();
  if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) !=
          1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(),
                     message.size()) != 1) {
    throw Error("Ed25519 signing failed");
  }
  sig.resize(sig_len);
  return sig;
}

bool AesGcmEd25519Suite::verify(ByteView public_key, ByteView message,
                                ByteView signature) const {
  if (public_key.size() != 32 || signature.size() != 64) return false;
  std::unique_ptr<EVP_PKEY, PkeyDeleter> key(EVP_PKEY_new_raw_public_key(
      EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!key || !ctx) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) !=
      1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

// ---------------------------------------------------------------------------
// Lightweight test suite

Bytes LightweightSuite::seal(const SymmetricKey& key,
                             ByteView plaintext) const {
  const std::uint64_t nonce = keyed_checksum(key, plaintext, 0x4E4F4E4345ull);
  Bytes out(8 + plaintext.size() + 8);
  store_u64(nonce, out.data());
  std::uint64_t state = keyed_checksum(key, {}, nonce);
  for (std::size_t i = 0; i < plaintext.size(); ++i) {
    if (i % 8 == 0) state = splitmix64(state);
    out[8 + i] = plaintext[i] ^ static_cast<std::uint8_t>(state >> (8 * (i % 8)));
  }
  const std::uint64_t tag = keyed_checksum(
      key, ByteView(out.data(), 8 + plaintext.size()), 0x544147ull);
  store_u64(tag, out.data() + 8 + plaintext.size());
  return out;
}

namespace {

std::optional<Bytes> lightweight_try_open(const SymmetricKey& key,
                                          ByteView ciphertext) {
  if (ciphertext.size() < 16) return std::nullopt;
  const std::size_t body = ciphertext.size() - 16;
  const std::uint64_t tag =
      keyed_checksum(key, ciphertext.first(8 + body), 0x544147ull);
  if (tag != load_u64(ciphertext.data() + 8 + body)) return std::nullopt;
  const std::uint64_t nonce = load_u64(ciphertext.data());
  std::uint64_t state = keyed_checksum(key, {}, nonce);
  Bytes out(body);
  for (std::size_t i = 0; i < body; ++i) {
    if (i % 8 == 0) state = splitmix64(state);
    out[i] = ciphertext[8 + i] ^ static_cast<std::uint8_t>(state >> (8 * (i % 8)));
  }
  return out;
}

class LightweightOpener final : public KeyedOpener {
 public:
  explicit LightweightOpener(const SymmetricKey& key) : key_(key) {}
  std::optional<Bytes> try_open(ByteView ciphertext) override {
    return lightweight_try_open(key_, ciphertext);
  }

 private:
  SymmetricKey key_;
};

}  // namespace

Bytes LightweightSuite::open(const SymmetricKey& key,
                             ByteView ciphertext) const {
  std::optional<Bytes> out = lightweight_try_open(key, ciphertext);
  if (!out) throw AuthenticationError("lightweight authentication failed");
  return std::move(*out);
}

std::unique_ptr<KeyedOpener> LightweightSuite::opener(const SymmetricKey& key) const {
  return std::make_unique<LightweightOpener>(key);
}

SigningKeyPair LightweightSuite::signing_keypair(std::uint64_t seed) const {
  Bytes secret(16);
  store_u64(splitmix64(seed ^ 0x5349474Eull), secret.data());
  store_u64(splitmix64(seed + 0x1234567ull), secret.data() + 8);
  return {secret, secret};
}

Bytes LightweightSuite::sign(ByteView secret_key, ByteView message) const {
  Bytes sig(8);
  store_u64(keyed_checksum(secret_key, message, 0x5349474Eull), sig.data());
  return sig;
}

bool LightweightSuite::verify(ByteView public_key, ByteView message,
                              ByteView signature) const {
  if (signature.size() != 8) return false;
  return keyed_checksum(public_key, message, 0x5349474Eull) ==
         load_u64(signature.data());
}

// ---------------------------------------------------------------------------

Bytes CountingSuite::seal(const SymmetricKey& key, ByteView plaintext) const {
  ++seals_;
  return inner_.seal(key, plaintext);
}

Bytes CountingSuite::open(const SymmetricKey& key, ByteView ciphertext) const {
  ++opens_;
  return inner_.open(key, ciphertext);
}

Bytes CountingSuite::sign(ByteView secret_key, ByteView message) const {
  ++signs_;
  return inner_.sign(secret_key, message);
}

bool CountingSuite::verify(ByteView public_key, ByteView message,
                           ByteView signature) const {
  ++verifies_;
  return inner_.verify(public_key, message, signature);
}

std::unique_ptr<CipherSuite> make_suite(std::string_view name) {
  if (name == "aes128gcm-ed25519") return std::make_unique<AesGcmEd25519Suite>();
  if (name == "lightweight") return std::make_unique<LightweightSuite>();
  throw ParameterError("unknown cipher suite: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Envelopes

Bytes signed_message(ByteView ciphertext, Tick timestamp) {
  ByteWriter w;
  w.bytes(ciphertext);
  w.u64(timestamp);
  return std::move(w).take();
}

SignedEnvelope sign_envelope(const CipherSuite& suite, ClientId sender,
                             Bytes ciphertext, Tick timestamp,
                             ByteView secret_key) {
  SignedEnvelope env;
  env.sender = sender;
  env.timestamp = timestamp;
  env.signature = suite.sign(secret_key, signed_message(ciphertext, timestamp));
  env.ciphertext = std::move(ciphertext);
  return env;
}

void verify_envelope(const CipherSuite& suite, const SignedEnvelope& envelope,
                     ByteView public_key, Tick now, Tick freshness_window) {
  if (!suite.verify(public_key,
                    signed_message(envelope.ciphertext, envelope.timestamp),
                    envelope.signature)) {
    throw ForgeryError("envelope signature does not verify");
  }
  const Tick age = now >= envelope.timestamp ? now - envelope.timestamp
                                             : envelope.timestamp - now;
  if (age > freshness_window) {
    throw ReplayError("envelope timestamp outside freshness window");
  }
}

Bytes encode_envelope(const SignedEnvelope& envelope) {
  if (envelope.ciphertext.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ParameterError("ciphertext too large for envelope");
  }
  if (envelope.signature.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ParameterError("signature too large for envelope");
  }
  ByteWriter w;
  w.u32(envelope.sender);
  w.u64(envelope.timestamp);
  w.u32(static_cast<std::uint32_t>(envelope.ciphertext.size()));
  w.bytes(envelope.ciphertext);
  w.u16(static_cast<std::uint16_t>(envelope.signature.size()));
  w.bytes(envelope.signature);
  return std::move(w).take();
}

SignedEnvelope decode_envelope(ByteView wire) {
  ByteReader r(wire);
  SignedEnvelope env;
  env.sender = r.u32();
  env.timestamp = r.u64();
  const std::uint32_t ct_len = r.u32();
  ByteView ct = r.bytes(ct_len);
  env.ciphertext.assign(ct.begin(), ct.end());
  const std::uint16_t sig_len = r.u16();
  ByteView sig = r.bytes(sig_len);
  env.signature.assign(sig.begin(), sig.end());
  if (!r.done()) throw DecodeError("trailing bytes after envelope");
  return env;
}

// ---------------------------------------------------------------------------
// Noise

NoiseVector generate_noise(std::size_t dim, unsigned generator,
                           std::uint64_t seed, unsigned width_bits) {
  if (dim == 0) throw ParameterError("noise dimension must be >= 1");
  if (generator >= kDefaultNoiseGenerators) {
    throw ParameterError("unknown noise generator " + std::to_string(generator));
  }
  if (width_bits == 0 || width_bits > 64) {
    throw ParameterError("noise width must lie in [1, 64]");
  }
  const std::uint64_t mask =
      width_bits == 64 ? ~0ull : ((1ull << width_bits) - 1);
  NoiseVector out;
  out.generator = generator;
  out.seed = seed;
  out.width_bits = width_bits;
  out.values.resize(dim);

  auto fill = [&](auto&& next_word) {
    for (auto& v : out.values) v = next_word() & mask;
  };
  switch (generator) {
    case 0: {
      std::mt19937 e(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
      fill([&] {
        const std::uint64_t hi = e();
        return (hi << 32) | e();
      });
      break;
    }
    case 1: {
      std::mt19937_64 e(seed);
      fill([&] { return e(); });
      break;
    }
    case 2: {
      std::ranlux48 e(seed);
      fill([&] {
        const std::uint64_t a = e();
        return (a << 16) ^ e();
      });
      break;
    }
    default: {
      std::uint64_t state = seed;
      fill([&] {
        state += 0x9E3779B97F4A7C15ull;
        return splitmix64(state);
      });
      break;
    }
  }
  return out;
}

}  // namespace ppt::crypto
