#include "doctest.h"

#include "crtmux/cipher.hpp"
#include "crtmux/error.hpp"

#include <random>

using namespace crtmux;

namespace {

Bytes hex(const std::string& s) {
   Bytes out;
   for (std::size_t i = 0; i < s.size(); i += 2)
      out.push_back(static_cast<std::uint8_t>(std::stoul(s.substr(i, 2), nullptr, 16)));
   return out;
}

CipherSuite fips_suite() {
   CipherSuite cs;
   const auto key = hex("000102030405060708090a0b0c0d0e0f");
   std::copy(key.begin(), key.end(), cs.key.begin());
   return cs;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
   Bytes b(n);
   for (auto& x : b)
      x = static_cast<std::uint8_t>(rng());
   return b;
}

}  // namespace

TEST_CASE("AES-128 CBC with zero IV reproduces the FIPS-197 Appendix C vector") {
   auto cipher = make_block_cipher(fips_suite());
   Block chain{};
   const SuperBlock pt{hex("00112233445566778899aabbccddeeff")};
   const auto ct = encrypt_superblock(pt, *cipher, chain);
   CHECK(ct.bytes == hex("69c4e0d86a7b0430d8cdb78070b4c55a"));
   CHECK(Bytes(chain.begin(), chain.end()) == ct.bytes);

   Block dchain{};
   CHECK(decrypt_superblock(ct, *cipher, dchain) == pt);
}

TEST_CASE("CBC chains across blocks and superblocks") {
   std::mt19937_64 rng(3);
   CipherSuite cs = fips_suite();
   for (auto& b : cs.iv)
      b = static_cast<std::uint8_t>(rng());
   auto cipher = make_block_cipher(cs);

   SUBCASE("L=2 equals two manual single-block steps") {
      const Bytes data = random_bytes(rng, 32);
      Block chain = cs.iv;
      const auto ct = encrypt_superblock(SuperBlock{data}, *cipher, chain);

      Block b0, b1;
      for (int i = 0; i < 16; ++i) {
         b0[i] = data[i] ^ cs.iv[i];
      }
      const Block c0 = cipher->encrypt_block(b0);
      for (int i = 0; i < 16; ++i)
         b1[i] = data[16 + i] ^ c0[i];
      const Block c1 = cipher->encrypt_block(b1);
      CHECK(Bytes(ct.bytes.begin(), ct.bytes.begin() + 16) == Bytes(c0.begin(), c0.end()));
      CHECK(Bytes(ct.bytes.begin() + 16, ct.bytes.end()) == Bytes(c1.begin(), c1.end()));
      CHECK(chain == c1);
   }

   SUBCASE("superblock-wise chaining equals CBC over the whole stream") {
      for (std::size_t l : {1u, 2u, 4u}) {
         const Bytes data = random_bytes(rng, 16 * l * 5);
         Block chain = cs.iv;
         Bytes piecewise;
         for (std::size_t off = 0; off < data.size(); off += 16 * l) {
            SuperBlock sb{Bytes(data.begin() + off, data.begin() + off + 16 * l)};
            const auto ct = encrypt_superblock(sb, *cipher, chain);
            piecewise.insert(piecewise.end(), ct.bytes.begin(), ct.bytes.end());
         }
         Block whole_chain = cs.iv;
         const auto whole = encrypt_superblock(SuperBlock{data}, *cipher, whole_chain);
         CHECK(whole.bytes == piecewise);
      }
   }

   SUBCASE("decrypt inverts encrypt for L in {1,2,4,8}") {
      for (std::size_t l : {1u, 2u, 4u, 8u}) {
         for (int rep = 0; rep < 20; ++rep) {
            const SuperBlock pt{random_bytes(rng, 16 * l)};
            Block e = cs.iv, d = cs.iv;
            const auto ct = encrypt_superblock(pt, *cipher, e);
            CHECK(decrypt_superblock(ct, *cipher, d) == pt);
            CHECK(e == d);
         }
      }
      const SuperBlock zero{Bytes(64, 0)};
      Block e = cs.iv, d = cs.iv;
      CHECK(decrypt_superblock(encrypt_superblock(zero, *cipher, e), *cipher, d) == zero);
   }

   SUBCASE("a wrong IV garbles only the first block") {
      const SuperBlock pt{random_bytes(rng, 64)};
      Block e = cs.iv;
      const auto ct = encrypt_superblock(pt, *cipher, e);
      Block wrong = cs.iv;
      wrong[0] ^= 0x80;
      const auto out = decrypt_superblock(ct, *cipher, wrong);
      CHECK(out.bytes[0] == (pt.bytes[0] ^ 0x80));
      CHECK(Bytes(out.bytes.begin() + 1, out.bytes.end()) ==
            Bytes(pt.bytes.begin() + 1, pt.bytes.end()));
   }

   CHECK_THROWS_AS(encrypt_superblock(SuperBlock{Bytes(15)}, *cipher, cs.iv), Error);
   CHECK_THROWS_AS(decrypt_superblock(SuperBlock{}, *cipher, cs.iv), Error);
}

TEST_CASE("pad examples") {
   auto empty = pad({}, 256);
   REQUIRE(empty.size() == 1);
   CHECK(empty[0].bytes == Bytes(32, 0x20));

   const Bytes b31(31, 0xab);
   auto one = pad(b31, 256);
   REQUIRE(one.size() == 1);
   CHECK(one[0].bytes.back() == 0x01);

   const Bytes b32(32, 0xcd);
   auto two = pad(b32, 256);
   REQUIRE(two.size() == 2);
   CHECK(two[0].bytes == b32);
   CHECK(two[1].bytes == Bytes(32, 0x20));

   CHECK(unpad(empty).empty());
   CHECK(unpad(one) == b31);
   CHECK(unpad(two) == b32);
}

TEST_CASE("unpad rejects malformed padding") {
   auto expect_bad = [](Bytes last) {
      try {
         unpad({SuperBlock{std::move(last)}});
         FAIL("expected BadPadding");
      } catch (const Error& e) {
         CHECK(e.code() == Errc::BadPadding);
      }
   };
   expect_bad(Bytes(32, 0x00));
   expect_bad(Bytes(32, 0x21));
   Bytes inconsistent(32, 0x04);
   inconsistent[29] = 0x03;
   expect_bad(inconsistent);
}

TEST_CASE("pad/unpad and integer conversion are exact inverses") {
   std::mt19937_64 rng(11);
   for (std::size_t l : {1u, 2u, 4u}) {
      const std::size_t n = 128 * l;
      for (int rep = 0; rep < 200; ++rep) {
         const Bytes data = random_bytes(rng, rng() % (4 * n + 1));
         const auto blocks = pad(data, n);
         for (const auto& sb : blocks) {
            CHECK(sb.size() == n / 8);
            CHECK(natural_to_superblock(superblock_to_natural(sb), n) == sb);
         }
         CHECK(unpad(blocks) == data);
      }
   }
}

TEST_CASE("superblock integer conversion examples") {
   CHECK(superblock_to_natural(SuperBlock{Bytes(16, 0)}) == 0);
   Bytes one(16, 0);
   one.back() = 1;
   CHECK(superblock_to_natural(SuperBlock{one}) == 1);
   CHECK(superblock_to_natural(SuperBlock{Bytes(16, 0xff)}) == pow2(128) - 1);

   CHECK(natural_to_superblock(pow2(128) - 1, 128).bytes == Bytes(16, 0xff));
   try {
      natural_to_superblock(pow2(128), 128);
      FAIL("expected Overflow");
   } catch (const Error& e) {
      CHECK(e.code() == Errc::Overflow);
   }
}
