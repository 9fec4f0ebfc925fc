#include "crtmux/cipher.hpp"

#include "crtmux/error.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace crtmux {

namespace {

struct EvpCtxDeleter {
   void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

// AES-128 from libcrypto, used strictly one block at a time; chaining is
// done by the callers below.
class Aes128 final : public BlockCipher {
public:
   explicit Aes128(const std::array<std::uint8_t, 16>& key)
      : enc_(init(key, 1)), dec_(init(key, 0)) {}

   Block encrypt_block(const Block& in) override { return run(enc_.get(), in); }
   Block decrypt_block(const Block& in) override { return run(dec_.get(), in); }

private:
   static EvpCtx init(const std::array<std::uint8_t, 16>& key, int encrypt) {
      EvpCtx ctx(EVP_CIPHER_CTX_new());
      if (!ctx || EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr,
                                    encrypt) != 1)
         throw Error(Errc::BadParameters, "AES-128 initialisation failed");
      EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
      return ctx;
   }

   static Block run(EVP_CIPHER_CTX* ctx, const Block& in) {
      Block out{};
      int len = 0;
      if (EVP_CipherUpdate(ctx, out.data(), &len, in.data(), static_cast<int>(in.size())) != 1 ||
          len != static_cast<int>(kBlockBytes))
         throw Error(Errc::BadParameters, "AES-128 block operation failed");
      return out;
   }

   EvpCtx enc_;
   EvpCtx dec_;
};

void check_length(const SuperBlock& sb) {
   if (sb.bytes.empty() || sb.bytes.size() % kBlockBytes != 0)
      throw Error(Errc::BadLength, "superblock of " + std::to_string(sb.bytes.size()) +
                                       " bytes is not a whole number of cipher blocks");
}

Block load_block(const Bytes& bytes, std::size_t offset) {
   Block b;
   std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), kBlockBytes, b.begin());
   return b;
}

}  // namespace

std::unique_ptr<BlockCipher> make_block_cipher(const CipherSuite& suite) {
   switch (suite.id) {
      case CipherId::Aes128:
         return std::make_unique<Aes128>(suite.key);
   }
   throw Error(Errc::BadParameters, "unknown cipher id");
}

SuperBlock encrypt_superblock(const SuperBlock& sb, BlockCipher& cipher, Block& chain) {
   check_length(sb);
   SuperBlock out{Bytes(sb.bytes.size())};
   for (std::size_t off = 0; off < sb.bytes.size(); off += kBlockBytes) {
      Block b = load_block(sb.bytes, off);
      for (std::size_t i = 0; i < kBlockBytes; ++i)
         b[i] ^= chain[i];
      chain = cipher.encrypt_block(b);
      std::copy(chain.begin(), chain.end(), out.bytes.begin() + static_cast<std::ptrdiff_t>(off));
   }
   return out;
}

SuperBlock decrypt_superblock(const SuperBlock& sb, BlockCipher& cipher, Block& chain) {
   check_length(sb);
   SuperBlock out{Bytes(sb.bytes.size())};
   for (std::size_t off = 0; off < sb.bytes.size(); off += kBlockBytes) {
      const Block c = load_block(sb.bytes, off);
      Block p = cipher.decrypt_block(c);
      for (std::size_t i = 0; i < kBlockBytes; ++i)
         p[i] ^= chain[i];
      chain = c;
      std::copy(p.begin(), p.end(), out.bytes.begin() + static_cast<std::ptrdiff_t>(off));
   }
   return out;
}

std::vector<SuperBlock> pad(std::span<const std::uint8_t> data, std::size_t superblock_bits) {
   const std::size_t width = superblock_bits / 8;
   if (width == 0 || superblock_bits % 8 != 0 || width > 255)
      throw Error(Errc::BadParameters, "superblock width must be 1..255 bytes");
   const std::size_t k = width - data.size() % width;

   Bytes padded(data.begin(), data.end());
   padded.insert(padded.end(), k, static_cast<std::uint8_t>(k));

   std::vector<SuperBlock> out;
   out.reserve(padded.size() / width);
   for (std::size_t off = 0; off < padded.size(); off += width)
      out.push_back(SuperBlock{Bytes(padded.begin() + static_cast<std::ptrdiff_t>(off),
                                     padded.begin() + static_cast<std::ptrdiff_t>(off + width))});
   return out;
}

std::size_t unpadded_length(const SuperBlock& last) {
   const std::size_t width = last.bytes.size();
   if (width == 0)
      throw Error(Errc::BadLength, "empty superblock");
   const std::size_t k = last.bytes.back();
   if (k == 0 || k > width)
      throw Error(Errc::BadPadding, "pad value " + std::to_string(k) + " out of range");
   for (std::size_t i = width - k; i < width; ++i)
      if (last.bytes[i] != k)
         throw Error(Errc::BadPadding, "inconsistent pad bytes");
   return width - k;
}

Bytes unpad(const std::vector<SuperBlock>& blocks) {
   if (blocks.empty())
      throw Error(Errc::BadLength, "no superblocks to unpad");
   const std::size_t width = blocks.front().size();
   Bytes out;
   out.reserve(width * blocks.size());
   for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
      if (blocks[i].size() != width)
         throw Error(Errc::BadLength, "superblocks differ in width");
      out.insert(out.end(), blocks[i].bytes.begin(), blocks[i].bytes.end());
   }
   const SuperBlock& last = blocks.back();
   if (last.size() != width)
      throw Error(Errc::BadLength, "superblocks differ in width");
   const std::size_t keep = unpadded_length(last);
   out.insert(out.end(), last.bytes.begin(), last.bytes.begin() + static_cast<std::ptrdiff_t>(keep));
   return out;
}

Natural superblock_to_natural(const SuperBlock& sb) { return from_bytes_be(sb.bytes); }

SuperBlock natural_to_superblock(const Natural& x, std::size_t superblock_bits) {
   return SuperBlock{to_bytes_be(x, superblock_bits / 8)};
}

}  // namespace crtmux
