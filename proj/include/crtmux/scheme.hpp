#pragma once

#include "crtmux/channel_select.hpp"
#include "crtmux/cipher.hpp"
#include "crtmux/crt.hpp"
#include "crtmux/error.hpp"
#include "crtmux/natural.hpp"
#include "crtmux/prng.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace crtmux {

inline constexpr std::uint32_t kDefaultSuperblocksPerSession = 1024;
// PKCS#7 pad values must fit in one byte, which caps a superblock at 255
// bytes, i.e. 15 AES blocks.
inline constexpr std::uint16_t kMaxMultiplier = 15;

/// The composite key produced by setup: cipher key material, channel
/// census, generator seed, moduli and their assignment mode.
struct SetupConfig {
   CipherSuite cipher;
   std::uint16_t available = 0;   // A
   std::uint16_t used = 0;        // S
   std::uint16_t multiplier = 0;  // L
   std::uint64_t seed = 0;
   AssignmentMode mode = AssignmentMode::Dynamic;
   std::uint32_t superblocks_per_session = kDefaultSuperblocksPerSession;
   ModuliSet moduli;  // A moduli when static, S when dynamic

   std::size_t superblock_bits() const { return std::size_t{multiplier} * kBlockBits; }
   std::size_t superblock_bytes() const { return std::size_t{multiplier} * kBlockBytes; }

   friend bool operator==(const SetupConfig&, const SetupConfig&) = default;
};

/// Throws `code` (BadParameters or InvariantViolation) describing the
/// first violated invariant.
void validate(const SetupConfig& cfg, Errc code = Errc::InvariantViolation);

/// Runs the setup phase. Moduli are generated from the moduli seed
/// domain of `seed`: S of them in dynamic mode, A in static mode, all of
/// bit length ceil(N/S) + 1 so that any S of them cover 2^N.
SetupConfig setup(const CipherSuite& cipher, std::uint16_t available, std::uint16_t used,
                  std::uint16_t multiplier, std::uint64_t seed, AssignmentMode mode,
                  std::uint32_t superblocks_per_session = kDefaultSuperblocksPerSession);

/// Cell width in bytes for every channel id. Dynamic mode uses one width
/// for all channels so widths reveal nothing about the selection.
std::vector<std::size_t> cell_widths(const SetupConfig& cfg);

enum class Role : std::uint8_t { Sender, Receiver };

struct SessionState {
   ChannelAssignment assignment;
   ModuliSet session_moduli;  // index-aligned with assignment.selected
   Block cbc_chain{};
   std::uint64_t superblock_index = 0;
   Role role = Role::Sender;
};

/// Selects this session's channels from `selection` (advancing it) and
/// binds moduli to them. The CBC chain restarts from the IV.
SessionState begin_session(const SetupConfig& cfg, Prng& selection, Role role);

enum class PacketKind : std::uint8_t { Real, Decoy };

/// One cell on one channel. `kind` is sender-side bookkeeping only; the
/// wire carries the payload alone.
struct ChannelPacket {
   ChannelId channel = 0;
   Bytes payload;
   PacketKind kind = PacketKind::Real;
};

Bytes encode_residue(const Natural& r, std::size_t width);
Natural decode_residue(std::span<const std::uint8_t> bytes);

/// `width` bytes, one per generator step (top byte of each output).
Bytes gen_decoy(Prng& prng, std::size_t width);

/// Encrypts and splits one plaintext superblock. Returns exactly A packets
/// ordered by channel id: residues on selected channels, decoys elsewhere.
std::vector<ChannelPacket> sender_process_superblock(SessionState& st, const SetupConfig& cfg,
                                                     BlockCipher& cipher,
                                                     const SuperBlock& plaintext, Prng& decoys);

/// Recombines and decrypts one superblock. Packets for non-selected
/// channels are ignored.
SuperBlock receiver_process_packets(SessionState& st, const SetupConfig& cfg, BlockCipher& cipher,
                                    std::span<const ChannelPacket> packets);

/// Sender state machine: rolls sessions over every
/// `superblocks_per_session` superblocks.
class Sender {
public:
   explicit Sender(SetupConfig cfg, std::optional<Prng> decoys = std::nullopt);

   std::vector<ChannelPacket> process(const SuperBlock& plaintext);

   const SetupConfig& config() const { return cfg_; }
   const SessionState& session() const { return session_; }
   std::uint64_t session_number() const { return session_number_; }

private:
   void roll_if_due();

   SetupConfig cfg_;
   std::unique_ptr<BlockCipher> cipher_;
   Prng selection_;
   Prng decoys_;
   SessionState session_;
   std::uint64_t session_number_ = 0;
};

class Receiver {
public:
   explicit Receiver(SetupConfig cfg);

   SuperBlock process(std::span<const ChannelPacket> packets);

   /// Channels to read for the next superblock (starts a session if due).
   const ChannelAssignment& next_assignment();

   const SetupConfig& config() const { return cfg_; }
   const SessionState& session() const { return session_; }

private:
   void roll_if_due();

   SetupConfig cfg_;
   std::unique_ptr<BlockCipher> cipher_;
   Prng selection_;
   SessionState session_;
   bool started_ = false;
};

/// Key file codec (big-endian):
///   "CRTM" | version 0x01 | cipher id | key[16] | iv[16] | A:u16 | S:u16 |
///   L:u16 | mode:u8 | seed:u64 | superblocks_per_session:u32 |
///   modulus count:u16 | { length:u16 | magnitude bytes } * count
Bytes serialize_config(const SetupConfig& cfg);

/// Throws BadMagic, BadVersion, Truncated or InvariantViolation.
SetupConfig deserialize_config(std::span<const std::uint8_t> bytes);

}  // namespace crtmux
