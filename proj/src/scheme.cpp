#include "crtmux/scheme.hpp"

#include "crtmux/error.hpp"

#include <algorithm>
#include <string>

namespace crtmux {

void validate(const SetupConfig& cfg, Errc code) {
   auto fail = [code](const std::string& why) { throw Error(code, why); };

   if (cfg.cipher.id != CipherId::Aes128)
      fail("unsupported cipher id");
   if (cfg.used < 1 || cfg.used > cfg.available)
      fail("need 1 <= S <= A (S=" + std::to_string(cfg.used) +
           ", A=" + std::to_string(cfg.available) + ")");
   if (cfg.multiplier < 1 || cfg.multiplier > kMaxMultiplier)
      fail("multiplier L must be in 1.." + std::to_string(kMaxMultiplier));
   if (cfg.superblocks_per_session < 1)
      fail("superblocks_per_session must be at least 1");
   if (cfg.mode != AssignmentMode::Dynamic && cfg.mode != AssignmentMode::Static)
      fail("unknown assignment mode");

   const Natural bound = pow2(cfg.superblock_bits());
   if (cfg.mode == AssignmentMode::Dynamic) {
      if (cfg.moduli.size() != cfg.used)
         fail("dynamic mode needs exactly S moduli");
      if (cfg.moduli.product() < bound)
         fail("moduli product is below 2^N");
   } else {
      if (cfg.moduli.size() != cfg.available)
         fail("static mode needs exactly A moduli");
      // The weakest S-subset is the S smallest moduli.
      std::vector<Natural> sorted = cfg.moduli.moduli();
      std::sort(sorted.begin(), sorted.end());
      Natural weakest = 1;
      for (std::size_t i = 0; i < cfg.used; ++i)
         weakest *= sorted[i];
      if (weakest < bound)
         fail("some S-subset of the static moduli has product below 2^N");
   }
}

SetupConfig setup(const CipherSuite& cipher, std::uint16_t available, std::uint16_t used,
                  std::uint16_t multiplier, std::uint64_t seed, AssignmentMode mode,
                  std::uint32_t superblocks_per_session) {
   SetupConfig cfg;
   cfg.cipher = cipher;
   cfg.available = available;
   cfg.used = used;
   cfg.multiplier = multiplier;
   cfg.seed = seed;
   cfg.mode = mode;
   cfg.superblocks_per_session = superblocks_per_session;

   if (used < 1 || used > available)
      throw Error(Errc::BadParameters, "need 1 <= S <= A");
   if (multiplier < 1 || multiplier > kMaxMultiplier)
      throw Error(Errc::BadParameters, "multiplier L must be in 1.." + std::to_string(kMaxMultiplier));

   const std::size_t count = mode == AssignmentMode::Static ? available : used;
   cfg.moduli = gen_moduli(cfg.superblock_bits(), used,
                           derive_prng(seed, SeedDomain::Moduli).state(), count);
   validate(cfg, Errc::BadParameters);
   return cfg;
}

std::vector<std::size_t> cell_widths(const SetupConfig& cfg) {
   if (cfg.mode == AssignmentMode::Static)
      return cfg.moduli.byte_widths();
   return std::vector<std::size_t>(cfg.available, cfg.moduli.max_byte_width());
}

SessionState begin_session(const SetupConfig& cfg, Prng& selection, Role role) {
   SessionState st;
   const auto selected = select_channels(selection, cfg.available, cfg.used);
   st.assignment = assign_moduli(cfg.mode, cfg.moduli, selected, cfg.available);

   std::vector<std::size_t> indices;
   indices.reserve(selected.size());
   for (ChannelId c : selected)
      indices.push_back(st.assignment.modulus_of.at(c));
   st.session_moduli = cfg.moduli.subset(indices);

   st.cbc_chain = cfg.cipher.iv;
   st.superblock_index = 0;
   st.role = role;
   return st;
}

Bytes encode_residue(const Natural& r, std::size_t width) { return to_bytes_be(r, width); }

Natural decode_residue(std::span<const std::uint8_t> bytes) { return from_bytes_be(bytes); }

Bytes gen_decoy(Prng& prng, std::size_t width) {
   Bytes out(width);
   for (auto& b : out)
      b = static_cast<std::uint8_t>(prng.next() >> 56);
   return out;
}

std::vector<ChannelPacket> sender_process_superblock(SessionState& st, const SetupConfig& cfg,
                                                     BlockCipher& cipher,
                                                     const SuperBlock& plaintext, Prng& decoys) {
   if (st.role != Role::Sender)
      throw Error(Errc::Precondition, "session is not a sender session");
   if (plaintext.size() != cfg.superblock_bytes())
      throw Error(Errc::BadLength, "plaintext superblock must be N/8 bytes");

   const SuperBlock ct = encrypt_superblock(plaintext, cipher, st.cbc_chain);
   const ResidueVector residues = crt_split(superblock_to_natural(ct), st.session_moduli);
   const auto widths = cell_widths(cfg);

   std::vector<ChannelPacket> packets(cfg.available);
   for (ChannelId c = 0; c < cfg.available; ++c) {
      packets[c].channel = c;
      packets[c].kind = PacketKind::Decoy;
   }
   for (std::size_t k = 0; k < st.assignment.selected.size(); ++k) {
      const ChannelId c = st.assignment.selected[k];
      packets[c].payload = encode_residue(residues[k], widths[c]);
      packets[c].kind = PacketKind::Real;
   }
   for (auto& p : packets)
      if (p.kind == PacketKind::Decoy)
         p.payload = gen_decoy(decoys, widths[p.channel]);

   ++st.superblock_index;
   return packets;
}

SuperBlock receiver_process_packets(SessionState& st, const SetupConfig& cfg, BlockCipher& cipher,
                                    std::span<const ChannelPacket> packets) {
   if (st.role != Role::Receiver)
      throw Error(Errc::Precondition, "session is not a receiver session");
   const auto widths = cell_widths(cfg);

   ResidueVector residues;
   residues.reserve(st.assignment.selected.size());
   for (std::size_t k = 0; k < st.assignment.selected.size(); ++k) {
      const ChannelId c = st.assignment.selected[k];
      auto it = std::find_if(packets.begin(), packets.end(),
                             [c](const ChannelPacket& p) { return p.channel == c; });
      if (it == packets.end())
         throw Error(Errc::MissingChannel, "no packet on channel " + std::to_string(c));
      if (it->payload.size() != widths[c])
         throw Error(Errc::BadWidth, "packet on channel " + std::to_string(c) + " has wrong width");
      Natural r = decode_residue(it->payload);
      if (r >= st.session_moduli[k])
         throw Error(Errc::ResidueOutOfRange,
                     "value on channel " + std::to_string(c) + " is not below its modulus");
      residues.push_back(std::move(r));
   }

   const Natural x = crt_combine(residues, st.session_moduli);
   // Throws Overflow when x >= 2^N.
   const SuperBlock ct = natural_to_superblock(x, cfg.superblock_bits());
   SuperBlock pt = decrypt_superblock(ct, cipher, st.cbc_chain);
   ++st.superblock_index;
   return pt;
}

Sender::Sender(SetupConfig cfg, std::optional<Prng> decoys)
   : cfg_(std::move(cfg)),
     cipher_(make_block_cipher(cfg_.cipher)),
     selection_(derive_prng(cfg_.seed, SeedDomain::ChannelSelect)),
     decoys_(decoys.value_or(derive_prng(cfg_.seed, SeedDomain::Decoy))) {
   validate(cfg_);
}

void Sender::roll_if_due() {
   if (session_number_ == 0 || session_.superblock_index >= cfg_.superblocks_per_session) {
      session_ = begin_session(cfg_, selection_, Role::Sender);
      ++session_number_;
   }
}

std::vector<ChannelPacket> Sender::process(const SuperBlock& plaintext) {
   roll_if_due();
   return sender_process_superblock(session_, cfg_, *cipher_, plaintext, decoys_);
}

Receiver::Receiver(SetupConfig cfg)
   : cfg_(std::move(cfg)),
     cipher_(make_block_cipher(cfg_.cipher)),
     selection_(derive_prng(cfg_.seed, SeedDomain::ChannelSelect)) {
   validate(cfg_);
}

void Receiver::roll_if_due() {
   if (!started_ || session_.superblock_index >= cfg_.superblocks_per_session) {
      session_ = begin_session(cfg_, selection_, Role::Receiver);
      started_ = true;
   }
}

const ChannelAssignment& Receiver::next_assignment() {
   roll_if_due();
   return session_.assignment;
}

SuperBlock Receiver::process(std::span<const ChannelPacket> packets) {
   roll_if_due();
   return receiver_process_packets(session_, cfg_, *cipher_, packets);
}

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'R', 'T', 'M'};
constexpr std::uint8_t kVersion = 0x01;

template <typename T>
void put_be(Bytes& out, T v) {
   for (int shift = 8 * (static_cast<int>(sizeof(T)) - 1); shift >= 0; shift -= 8)
      out.push_back(static_cast<std::uint8_t>(v >> shift));
}

class Reader {
public:
   explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

   std::span<const std::uint8_t> take(std::size_t n) {
      if (in_.size() - pos_ < n)
         throw Error(Errc::Truncated, "key file ends early");
      auto s = in_.subspan(pos_, n);
      pos_ += n;
      return s;
   }

   template <typename T>
   T get_be() {
      T v = 0;
      for (std::uint8_t b : take(sizeof(T)))
         v = static_cast<T>((v << 8) | b);
      return v;
   }

   bool done() const { return pos_ == in_.size(); }

private:
   std::span<const std::uint8_t> in_;
   std::size_t pos_ = 0;
};

}  // namespace

Bytes serialize_config(const SetupConfig& cfg) {
   Bytes out(std::begin(kMagic), std::end(kMagic));
   out.push_back(kVersion);
   out.push_back(static_cast<std::uint8_t>(cfg.cipher.id));
   out.insert(out.end(), cfg.cipher.key.begin(), cfg.cipher.key.end());
   out.insert(out.end(), cfg.cipher.iv.begin(), cfg.cipher.iv.end());
   put_be<std::uint16_t>(out, cfg.available);
   put_be<std::uint16_t>(out, cfg.used);
   put_be<std::uint16_t>(out, cfg.multiplier);
   out.push_back(static_cast<std::uint8_t>(cfg.mode));
   put_be<std::uint64_t>(out, cfg.seed);
   put_be<std::uint32_t>(out, cfg.superblocks_per_session);
   put_be<std::uint16_t>(out, static_cast<std::uint16_t>(cfg.moduli.size()));
   for (const auto& q : cfg.moduli.moduli()) {
      const std::size_t len = (bit_length(q) + 7) / 8;
      put_be<std::uint16_t>(out, static_cast<std::uint16_t>(len));
      const Bytes mag = to_bytes_be(q, len);
      out.insert(out.end(), mag.begin(), mag.end());
   }
   return out;
}

SetupConfig deserialize_config(std::span<const std::uint8_t> bytes) {
   Reader in(bytes);
   if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
      throw Error(Errc::BadMagic, "not a key file");
   in.take(4);
   if (in.get_be<std::uint8_t>() != kVersion)
      throw Error(Errc::BadVersion, "unsupported key file version");

   SetupConfig cfg;
   cfg.cipher.id = static_cast<CipherId>(in.get_be<std::uint8_t>());
   auto key = in.take(16);
   std::copy(key.begin(), key.end(), cfg.cipher.key.begin());
   auto iv = in.take(16);
   std::copy(iv.begin(), iv.end(), cfg.cipher.iv.begin());
   cfg.available = in.get_be<std::uint16_t>();
   cfg.used = in.get_be<std::uint16_t>();
   cfg.multiplier = in.get_be<std::uint16_t>();
   cfg.mode = static_cast<AssignmentMode>(in.get_be<std::uint8_t>());
   cfg.seed = in.get_be<std::uint64_t>();
   cfg.superblocks_per_session = in.get_be<std::uint32_t>();

   const auto count = in.get_be<std::uint16_t>();
   std::vector<Natural> moduli;
   moduli.reserve(count);
   for (std::uint16_t i = 0; i < count; ++i) {
      const auto len = in.get_be<std::uint16_t>();
      moduli.push_back(from_bytes_be(in.take(len)));
   }
   if (!in.done())
      throw Error(Errc::InvariantViolation, "trailing bytes after moduli");

   try {
      cfg.moduli = ModuliSet(std::move(moduli));
   } catch (const Error& e) {
      throw Error(Errc::InvariantViolation, e.what());
   }
   validate(cfg, Errc::InvariantViolation);
   return cfg;
}

}  // namespace crtmux
