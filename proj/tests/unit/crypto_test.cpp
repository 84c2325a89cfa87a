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

#include <array>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "ppt/crypto.hpp"
#include "ppt/model.hpp"
#include "support/generators.hpp"

namespace ppt::crypto {
namespace {

const AesGcmEd25519Suite kAes;
const LightweightSuite kLight;

SymmetricKey random_key(Rng& rng) {
  SymmetricKey k;
  for (auto& b : k) b = static_cast<std::uint8_t>(rng.next_u64());
  return k;
}

Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64());
  return out;
}

double chi2_critical(double df) {
  return boost::math::quantile(boost::math::chi_squared(df), 0.999);
}

class SuiteTest : public ::testing::TestWithParam<const CipherSuite*> {};

TEST_P(SuiteTest, EmptyAndLargePayloadsRoundTrip) {
  const CipherSuite& s = *GetParam();
  Rng rng(1);
  const SymmetricKey k = random_key(rng);
  EXPECT_TRUE(s.open(k, s.seal(k, {})).empty());
  const Bytes mib = random_bytes(rng, 1 << 20);
  EXPECT_EQ(s.open(k, s.seal(k, mib)), mib);
}

TEST_P(SuiteTest, RoundTripProperty) {
  const CipherSuite& s = *GetParam();
  gen::for_all(31, 200, [&](Rng& rng) {
    const SymmetricKey k = random_key(rng);
    const Bytes m = random_bytes(rng, rng.below(300));
    EXPECT_EQ(s.open(k, s.seal(k, m)), m);
    EXPECT_EQ(s.seal(k, m), s.seal(k, m));  // deterministic
  });
}

TEST_P(SuiteTest, BitFlipsRejected) {
  const CipherSuite& s = *GetParam();
  Rng rng(2);
  const SymmetricKey k = random_key(rng);
  const Bytes ct = s.seal(k, random_bytes(rng, 64));
  for (int i = 0; i < 1000; ++i) {
    Bytes t = ct;
    const std::size_t bit = rng.below(t.size() * 8);
    t[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_THROW(s.open(k, t), AuthenticationError) << "bit " << bit;
  }
  EXPECT_THROW(s.open(k, Bytes(ct.begin(), ct.begin() + 5)), AuthenticationError);
}

TEST_P(SuiteTest, WrongKeyRejected) {
  const CipherSuite& s = *GetParam();
  gen::for_all(32, 100, [&](Rng& rng) {
    const SymmetricKey k = random_key(rng);
    SymmetricKey other = k;
    other[rng.below(other.size())] ^= 0x5A;
    EXPECT_THROW(s.open(other, s.seal(k, random_bytes(rng, 20))), AuthenticationError);
  });
}

TEST_P(SuiteTest, OpenerMatchesOpen) {
  const CipherSuite& s = *GetParam();
  Rng rng(3);
  const SymmetricKey k = random_key(rng);
  const SymmetricKey other = random_key(rng);
  auto opener = s.opener(k);
  for (int i = 0; i < 50; ++i) {
    const Bytes m = random_bytes(rng, rng.below(40));
    EXPECT_EQ(opener->try_open(s.seal(k, m)), m);
    EXPECT_EQ(opener->try_open(s.seal(other, m)), std::nullopt);
  }
}

TEST_P(SuiteTest, SignaturesVerifyOnlyUnchanged) {
  const CipherSuite& s = *GetParam();
  const SigningKeyPair a = s.signing_keypair(1);
  const SigningKeyPair b = s.signing_keypair(2);
  EXPECT_EQ(s.signing_keypair(1).public_key, a.public_key);
  gen::for_all(33, 100, [&](Rng& rng) {
    Bytes m = random_bytes(rng, 1 + rng.below(100));
    const Bytes sig = s.sign(a.secret_key, m);
    EXPECT_TRUE(s.verify(a.public_key, m, sig));
    EXPECT_FALSE(s.verify(b.public_key, m, sig));
    Bytes sig2 = sig;
    sig2[rng.below(sig2.size())] ^= 1;
    EXPECT_FALSE(s.verify(a.public_key, m, sig2));
    m[rng.below(m.size())] ^= 0x80;
    EXPECT_FALSE(s.verify(a.public_key, m, sig));
  });
}

TEST_P(SuiteTest, EnvelopeFreshness) {
  const CipherSuite& s = *GetParam();
  const SigningKeyPair a = s.signing_keypair(10);
  const SigningKeyPair b = s.signing_keypair(11);
  const SignedEnvelope env = sign_envelope(s, 4, Bytes{1, 2, 3}, 100, a.secret_key);
  EXPECT_NO_THROW(verify_envelope(s, env, a.public_key, 100, 10));
  EXPECT_NO_THROW(verify_envelope(s, env, a.public_key, 110, 10));
  EXPECT_THROW(verify_envelope(s, env, a.public_key, 111, 10), ReplayError);
  EXPECT_THROW(verify_envelope(s, env, a.public_key, 89, 10), ReplayError);
  EXPECT_THROW(verify_envelope(s, env, b.public_key, 100, 10), ForgeryError);

  SignedEnvelope moved = env;
  moved.timestamp = 105;  // timestamp is covered by the signature
  EXPECT_THROW(verify_envelope(s, moved, a.public_key, 105, 10), ForgeryError);
}

INSTANTIATE_TEST_SUITE_P(Suites, SuiteTest, ::testing::Values(&kAes, &kLight),
                         [](const auto& info) {
                           return std::string(info.param == &kAes ? "Aes" : "Lightweight");
                         });

TEST(Envelope, WireFormatIsBitExact) {
  SignedEnvelope env{.sender = 0x01020304, .timestamp = 0x1122334455667788,
                     .ciphertext = {0xAA, 0xBB}, .signature = {0xCC}};
  const Bytes want{0x04, 0x03, 0x02, 0x01, 0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22,
                   0x11, 0x02, 0x00, 0x00, 0x00, 0xAA, 0xBB, 0x01, 0x00, 0xCC};
  EXPECT_EQ(encode_envelope(env), want);
  EXPECT_EQ(decode_envelope(want), env);
  Bytes trailing = want;
  trailing.push_back(0);
  EXPECT_THROW(decode_envelope(trailing), DecodeError);
  EXPECT_THROW(decode_envelope(ByteView(want).first(want.size() - 1)), DecodeError);
}

TEST(Envelope, SignedMessageLayout) {
  const Bytes m = signed_message(Bytes{9, 8}, 0x0102);
  EXPECT_EQ(m, (Bytes{9, 8, 0x02, 0x01, 0, 0, 0, 0, 0, 0}));
}

// No mutation of a signed envelope is accepted by the verification chain.
TEST(Envelope, MutationFuzzing) {
  const SigningKeyPair a = kAes.signing_keypair(5);
  Rng rng(4);
  const SymmetricKey k = random_key(rng);
  const SignedEnvelope env =
      sign_envelope(kAes, 7, kAes.seal(k, random_bytes(rng, 48)), 50, a.secret_key);
  const Bytes wire = encode_envelope(env);
  std::size_t accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes w = wire;
    const int flips = 1 + static_cast<int>(rng.below(3));
    for (int f = 0; f < flips; ++f) w[rng.below(w.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    if (w == wire) continue;
    try {
      const SignedEnvelope got = decode_envelope(w);
      if (got.sender != 7) continue;  // would be checked against another key
      verify_envelope(kAes, got, a.public_key, 50, 10);
      kAes.open(k, got.ciphertext);
      ++accepted;
    } catch (const Error&) {
    }
  }
  EXPECT_EQ(accepted, 0u);
}

TEST(Suites, FactoryAndCounting) {
  EXPECT_EQ(make_suite("aes128gcm-ed25519")->name(), "aes128gcm-ed25519");
  EXPECT_EQ(make_suite("lightweight")->name(), "lightweight");
  EXPECT_THROW(make_suite("rot13"), ParameterError);

  CountingSuite c(kLight);
  const SymmetricKey k{};
  const Bytes ct = c.seal(k, Bytes{1});
  c.open(k, ct);
  c.opener(k)->try_open(ct);
  const auto kp = c.signing_keypair(1);
  const Bytes sig = c.sign(kp.secret_key, Bytes{1});
  c.verify(kp.public_key, Bytes{1}, sig);
  EXPECT_EQ(c.seals(), 1u);
  EXPECT_EQ(c.opens(), 2u);
  EXPECT_EQ(c.signs(), 1u);
  EXPECT_EQ(c.verifies(), 1u);
}

TEST(XorKeys, GroupLaws) {
  gen::for_all(34, 50, [](Rng& rng) {
    const SymmetricKey a = random_key(rng), b = random_key(rng);
    EXPECT_EQ(xor_keys(a, b), xor_keys(b, a));
    EXPECT_EQ(xor_keys(xor_keys(a, b), b), a);
    EXPECT_EQ(xor_keys(a, a), SymmetricKey{});
  });
}

TEST(Noise, ShapeDeterminismAndErrors) {
  EXPECT_EQ(generate_noise(1, 0, 5).values.size(), 1u);
  for (unsigned g = 0; g < kDefaultNoiseGenerators; ++g) {
    const NoiseVector a = generate_noise(64, g, 42);
    EXPECT_EQ(a.values, generate_noise(64, g, 42).values);
    EXPECT_NE(a.values, generate_noise(64, g, 43).values);
    EXPECT_EQ(a.generator, g);
    for (std::uint64_t v : a.values) EXPECT_LE(v, 0xFFFFFFFFull);
  }
  EXPECT_THROW(generate_noise(0, 0, 1), ParameterError);
  EXPECT_THROW(generate_noise(4, kDefaultNoiseGenerators, 1), ParameterError);
  EXPECT_THROW(generate_noise(4, 0, 1, 65), ParameterError);
}

TEST(Noise, MaskThenUnmaskIsIdentity) {
  gen::for_all(35, 1000, [](Rng& rng) {
    const model::EncodedUpdate x = gen::small_update(rng, 1 + rng.below(8));
    const NoiseVector s = generate_noise(x.packed.dim(), static_cast<unsigned>(rng.below(4)),
                                         rng.next_u64());
    EXPECT_EQ(model::remove_mask(model::apply_mask(x, s), s), x);
  });
}

TEST(Noise, GeneratorsAreUniform) {
  // Top nibble of 32-bit words, 16 bins.
  const double crit = chi2_critical(15);
  EXPECT_NEAR(crit, 37.697, 1e-3);
  for (unsigned g = 0; g < kDefaultNoiseGenerators; ++g) {
    const NoiseVector s = generate_noise(32000, g, 7);
    std::array<double, 16> bins{};
    for (std::uint64_t v : s.values) bins[v >> 28] += 1;
    double stat = 0;
    for (double b : bins) stat += (b - 2000.0) * (b - 2000.0) / 2000.0;
    EXPECT_LT(stat, crit) << "generator " << g;
  }
}

// With w = 16 and uniform s, (x + s) mod 2^16 looks the same for any x: the
// high byte is uniform over 256 bins and independent of which x was masked.
TEST(Noise, MaskedValueIndependentOfSecret) {
  const double crit = chi2_critical(255);
  EXPECT_NEAR(crit, 330.5197, 1e-3);
  const std::array<std::uint64_t, 2> secrets{0, 0xBEEF};
  constexpr std::size_t kSamples = 51200;
  std::array<std::array<double, 256>, 2> table{};
  for (std::size_t i = 0; i < secrets.size(); ++i) {
    const NoiseVector s = generate_noise(kSamples, 1, 100 + i, 16);
    for (std::uint64_t v : s.values) table[i][((secrets[i] + v) & 0xFFFF) >> 8] += 1;
    double stat = 0;
    const double expected = kSamples / 256.0;
    for (double b : table[i]) stat += (b - expected) * (b - expected) / expected;
    EXPECT_LT(stat, crit) << "secret " << secrets[i];
  }
  // 2 x 256 contingency test of independence.
  double stat = 0;
  for (std::size_t j = 0; j < 256; ++j) {
    const double col = table[0][j] + table[1][j];
    for (std::size_t i = 0; i < 2; ++i) {
      const double e = col / 2.0;
      if (e > 0) stat += (table[i][j] - e) * (table[i][j] - e) / e;
    }
  }
  EXPECT_LT(stat, crit);
}

}  // namespace
}  // namespace ppt::crypto
