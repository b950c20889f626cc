#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "leap/crypto/aes128.hpp"
#include "leap/crypto/keyed_hash.hpp"
#include "leap/crypto/op_counters.hpp"
#include "leap/crypto/rc4.hpp"
#include "leap/crypto/sha256.hpp"
#include "leap/crypto/test_vectors.hpp"
#include "leap/errors.hpp"
#include "leap/hex.hpp"
#include "oracles.hpp"

using namespace leap;
using namespace leap::crypto;

namespace {

std::vector<TestVector> vectors(const char* name) {
    auto v = load_test_vectors(std::string(LEAP_VECTOR_DIR) + "/" + name);
    EXPECT_FALSE(v.empty()) << name;
    return v;
}

std::vector<std::uint8_t> oracle_rc4(const std::vector<std::uint8_t>& key, std::size_t n) { return oracle::rc4(key, n); }

}  // namespace

TEST(Rc4, PublishedVectors) {
    for (const auto& v : vectors("rc4.txt")) {
        const auto ks = rc4_keystream(v.key, v.input.size());
        std::vector<std::uint8_t> ct(v.input.size());
        for (std::size_t i = 0; i < ct.size(); ++i) ct[i] = v.input[i] ^ ks[i];
        EXPECT_EQ(to_hex(ct), to_hex(v.output)) << "line " << v.line;
    }
}

TEST(Rc4, KeystreamAtOffset240) {
    // RFC 6229, 40-bit and 128-bit keys, bytes 240..255.
    const auto k40 = rc4_keystream(from_hex("0102030405"), 256);
    EXPECT_EQ(to_hex(std::span(k40).subspan(240)), "28CB1132C96CE286421DCAADB8B69EAE");
    const auto k128 = rc4_keystream(from_hex("0102030405060708090A0B0C0D0E0F10"), 256);
    EXPECT_EQ(to_hex(std::span(k128).subspan(240)), "065902E4B620F6CC36C8589F66432F2B");
}

TEST(Rc4, MatchesIndependentImplementation) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> key(5 + rng() % 60);
        for (auto& b : key) b = static_cast<std::uint8_t>(rng());
        ASSERT_EQ(rc4_keystream(key, 256), oracle_rc4(key, 256));
    }
}

TEST(Rc4, PermutationStaysAPermutationAndCountersTrack) {
    reset_op_counters();
    Rc4 rc4(from_hex("00112233445566778899AABBCCDDEEFF0001020304050607"));
    for (int step = 0; step < 4096; ++step) {
        rc4.next();
        if (step % 257 == 0) {
            auto s = rc4.permutation();
            std::sort(s.begin(), s.end());
            for (int i = 0; i < 256; ++i) ASSERT_EQ(s[i], i);
        }
    }
    EXPECT_EQ(op_counters().ksa, 1U);
    EXPECT_EQ(op_counters().prga_bytes, 4096U);
}

TEST(Rc4, OneShotMatchesStatefulGenerator) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> key(5 + rng() % 60);
        for (auto& b : key) b = static_cast<std::uint8_t>(rng());
        std::vector<std::uint8_t> a(rng() % 600), b(a.size());
        Rc4(key).generate(a);
        rc4_keystream_into(key, b);
        ASSERT_EQ(a, b) << trial;
    }
    reset_op_counters();
    std::array<std::uint8_t, 256> out{};
    rc4_keystream_into(std::vector<std::uint8_t>(24, 1), out);
    EXPECT_EQ(op_counters().ksa, 1U);
    EXPECT_EQ(op_counters().prga_bytes, 256U);
    EXPECT_THROW(rc4_keystream_into(std::vector<std::uint8_t>(4), out), KeyLengthError);
}

TEST(Rc4, KeyLengthLimits) {
    EXPECT_THROW(Rc4(std::vector<std::uint8_t>(4)), KeyLengthError);
    EXPECT_THROW(Rc4(std::vector<std::uint8_t>(65)), KeyLengthError);
    EXPECT_NO_THROW(Rc4(std::vector<std::uint8_t>(64)));
}

TEST(Aes128, OfficialVectors) {
    for (const auto& v : vectors("aes128.txt")) {
        const auto key = SymmetricKey128::from_span(v.key);
        EXPECT_EQ(to_hex(block_encrypt(key, v.input)), to_hex(v.output)) << "line " << v.line;
        EXPECT_EQ(to_hex(block_decrypt(key, v.output)), to_hex(v.input)) << "line " << v.line;
    }
}

TEST(Aes128, InverseOnRandomBlocks) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        SymmetricKey128 key;
        Block128 block;
        for (auto& b : key.bytes) b = static_cast<std::uint8_t>(rng());
        for (auto& b : block) b = static_cast<std::uint8_t>(rng());
        const Aes128 aes(key);
        ASSERT_EQ(aes.decrypt(aes.encrypt(block)), block);
    }
}

TEST(Aes128, DistinctKeysGiveDistinctCiphertexts) {
    std::mt19937_64 rng(9);
    Block128 block{};
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        SymmetricKey128 key;
        for (auto& b : key.bytes) b = static_cast<std::uint8_t>(rng());
        seen.insert(to_hex(Aes128(key).encrypt(block)));
    }
    EXPECT_EQ(seen.size(), 1000U);
}

TEST(Aes128, WrongBlockSize) {
    EXPECT_THROW(block_encrypt(SymmetricKey128{}, std::vector<std::uint8_t>(15)), Error);
    EXPECT_THROW(SymmetricKey128::from_span(std::vector<std::uint8_t>(15)), KeyLengthError);
}

TEST(Sha256, OfficialVectors) {
    for (const auto& v : vectors("sha256.txt")) EXPECT_EQ(to_hex(sha256(v.input)), to_hex(v.output)) << "line " << v.line;
}

TEST(Sha256, MillionA) {
    Sha256 h;
    const std::vector<std::uint8_t> chunk(1000, 'a');
    for (int i = 0; i < 1000; ++i) h.update(chunk);
    EXPECT_EQ(to_hex(h.finish()), "CDC76E5C9914FB9281A1C7E284D73E67F1809A48A497200E046D39CCC7112CD0");
}

TEST(Sha256, IncrementalEqualsOneShot) {
    std::mt19937_64 rng(13);
    std::vector<std::uint8_t> msg(1000);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    for (std::size_t split : {0UL, 1UL, 55UL, 64UL, 65UL, 999UL}) {
        Sha256 h;
        h.update(std::span(msg).first(split));
        h.update(std::span(msg).subspan(split));
        ASSERT_EQ(h.finish(), sha256(msg));
    }
}

TEST(HmacSha256, Rfc4231) {
    for (const auto& v : vectors("hmac_sha256.txt")) {
        EXPECT_EQ(to_hex(hmac_sha256(v.key, v.input)), to_hex(v.output)) << "line " << v.line;
        const auto tag = keyed_hash(v.key, v.input);
        const std::uint32_t expect = (std::uint32_t{v.output[0]} << 24) | (std::uint32_t{v.output[1]} << 16) |
                                     (std::uint32_t{v.output[2]} << 8) | v.output[3];
        EXPECT_EQ(tag.tag, expect);
    }
}

TEST(Kdf, FirstSixteenBytesOfHash) {
    const auto a = SymmetricKey128::from_hex("000102030405060708090A0B0C0D0E0F");
    const auto b = SymmetricKey128::from_hex("F0F1F2F3F4F5F6F7F8F9FAFBFCFDFEFF");
    Block128 seed{};
    seed[15] = 1;
    std::vector<std::uint8_t> concat(a.bytes.begin(), a.bytes.end());
    concat.insert(concat.end(), b.bytes.begin(), b.bytes.end());
    concat.insert(concat.end(), seed.begin(), seed.end());
    const auto digest = sha256(concat);
    EXPECT_TRUE(std::equal(digest.begin(), digest.begin() + 16, kdf(a, b, seed).bytes.begin()));
    EXPECT_NE(kdf(a, b, seed), kdf(b, a, seed));
}

TEST(Kdf, DistinctSeedsGiveDistinctKeys) {
    const auto a = SymmetricKey128::from_hex("000102030405060708090A0B0C0D0E0F");
    const auto b = SymmetricKey128::from_hex("F0F1F2F3F4F5F6F7F8F9FAFBFCFDFEFF");
    std::mt19937_64 rng(17);
    std::set<std::string> keys;
    for (int i = 0; i < 1000; ++i) {
        Block128 seed;
        for (auto& x : seed) x = static_cast<std::uint8_t>(rng());
        keys.insert(kdf(a, b, seed).to_hex());
    }
    EXPECT_EQ(keys.size(), 1000U);
}

TEST(TestVectors, RejectsMalformedLines) {
    std::istringstream bad("00,11\n");
    EXPECT_THROW(read_test_vectors(bad), Error);
    std::istringstream ok("# comment\n\n00,11,22\n");
    EXPECT_EQ(read_test_vectors(ok).size(), 1U);
}

TEST(Hex, RoundTripAndErrors) {
    EXPECT_EQ(to_hex(from_hex("00ff10")), "00FF10");
    EXPECT_THROW(from_hex("0"), Error);
    EXPECT_THROW(from_hex("zz"), Error);
}
