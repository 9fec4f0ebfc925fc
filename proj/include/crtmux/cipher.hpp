#pragma once

#include "crtmux/natural.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace crtmux {

enum class CipherId : std::uint8_t { Aes128 = 0x01 };

inline constexpr std::size_t kBlockBytes = 16;
inline constexpr std::size_t kBlockBits = 8 * kBlockBytes;

using Block = std::array<std::uint8_t, kBlockBytes>;

/// Cipher choice plus key material. N_B is 128 bits for every supported id.
struct CipherSuite {
   CipherId id = CipherId::Aes128;
   std::array<std::uint8_t, 16> key{};
   Block iv{};

   friend bool operator==(const CipherSuite&, const CipherSuite&) = default;
};

/// Single-block primitive. Implementations are not thread-safe.
class BlockCipher {
public:
   virtual ~BlockCipher() = default;
   virtual Block encrypt_block(const Block& in) = 0;
   virtual Block decrypt_block(const Block& in) = 0;
};

std::unique_ptr<BlockCipher> make_block_cipher(const CipherSuite& suite);

/// N-bit unit of encryption: L cipher blocks, read as a big-endian integer.
struct SuperBlock {
   Bytes bytes;

   std::size_t size() const { return bytes.size(); }
   friend bool operator==(const SuperBlock&, const SuperBlock&) = default;
};

/// CBC over the blocks of `sb`, continuing from `chain`; on return `chain`
/// holds the last ciphertext block. Throws BadLength unless the size is a
/// nonzero multiple of the block size.
SuperBlock encrypt_superblock(const SuperBlock& sb, BlockCipher& cipher, Block& chain);
SuperBlock decrypt_superblock(const SuperBlock& sb, BlockCipher& cipher, Block& chain);

/// PKCS#7-style padding at superblock width (N/8 bytes). Always appends
/// 1..N/8 bytes, so an aligned input gains a whole padding superblock.
std::vector<SuperBlock> pad(std::span<const std::uint8_t> data, std::size_t superblock_bits);

/// Inverse of pad. Throws BadPadding on a malformed tail, BadLength on
/// ragged or empty input.
Bytes unpad(const std::vector<SuperBlock>& blocks);

/// Bytes of the final superblock that survive unpadding.
std::size_t unpadded_length(const SuperBlock& last);

Natural superblock_to_natural(const SuperBlock& sb);

/// Throws Overflow if x >= 2^N.
SuperBlock natural_to_superblock(const Natural& x, std::size_t superblock_bits);

}  // namespace crtmux
