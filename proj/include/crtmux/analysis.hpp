#pragma once

#include "crtmux/channel_select.hpp"
#include "crtmux/cipher.hpp"
#include "crtmux/crt.hpp"
#include "crtmux/natural.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crtmux {

// ---------------------------------------------------------------------------
// Bandwidth

/// Waste from carrying ceil(N/S)-bit residues in whole bytes.
struct BandwidthReport {
   std::size_t superblock_bits = 0;
   std::size_t channels = 0;
   std::size_t bits_per_channel = 0;
   std::size_t bytes_per_channel = 0;
   double loss_fraction = 0.0;  // (8*bytes - bits) / (8*bytes)
};

BandwidthReport bandwidth_loss(std::size_t block_bits, std::size_t multiplier, std::size_t channels);

/// Largest S for which S primes of bit length ceil(N/S)+1 exist, i.e. the
/// most channels this toolkit's moduli sizing can serve for N-bit
/// superblocks. Grows like N / log N.
std::size_t s_max_estimate(std::size_t superblock_bits);

// ---------------------------------------------------------------------------
// Residue independence

/// Joint tally of (x mod p, x mod q) for x in [0, p*q). counts is p rows of
/// q columns.
struct JointTable {
   std::uint32_t p = 0;
   std::uint32_t q = 0;
   std::vector<std::uint32_t> counts;

   std::uint32_t at(std::uint32_t y, std::uint32_t z) const { return counts[std::size_t{y} * q + z]; }
   /// Every cell holds exactly one x, i.e. P(y, z) = 1/(pq) = P(y) P(z).
   bool flat() const;
};

/// Exhaustive table. Throws NotCoprime, or Precondition when p*q > 2^20.
JointTable independence_check(std::uint32_t p, std::uint32_t q);

// ---------------------------------------------------------------------------
// Distinguishability

struct ChannelGap {
   Natural modulus;
   Natural gap;  // 2^(l_i) - q_i values that no residue can take
};

struct DistinguisherReport {
   std::size_t superblock_bits = 0;
   std::size_t total_bits = 0;  // sum of ceil(log2 q_i)
   double p_d_theoretical = 0.0;  // 1 - 2^(N - total_bits)
   std::vector<ChannelGap> per_channel_gap;
   std::optional<double> empirical_detection_rate;
};

/// Throws ProductTooSmall when the moduli cannot represent N-bit values.
DistinguisherReport distinguishability(std::size_t superblock_bits, const ModuliSet& m);

struct ScanResult {
   std::uint64_t invalid = 0;
   std::uint64_t total = 0;
};

/// Counts big-endian cells in `stream` whose value is >= q. Throws
/// WidthMismatch if the stream is not a whole number of cells.
ScanResult invalid_residue_scan(std::span<const std::uint8_t> stream, std::size_t cell_width,
                                const Natural& q);

enum class Verdict { Real, Decoy };

struct ChannelVerdict {
   ChannelId channel = 0;
   Verdict verdict = Verdict::Real;
   std::size_t cells = 0;
   std::optional<std::size_t> first_invalid_cell;
};

/// Adversary's classifier: a channel is decoy once any of its cells
/// reaches the hypothesised modulus for that channel. `streams[c]` is the
/// raw cell stream of channel c. Throws WidthMismatch on ragged streams,
/// Precondition on an empty stream or mismatched argument lengths.
std::vector<ChannelVerdict> channel_classifier(const std::vector<Bytes>& streams,
                                               const std::vector<std::size_t>& cell_widths,
                                               const std::vector<Natural>& hypothesis);

/// Per-channel thresholds from a moduli guess. One modulus per channel is
/// used as is (static assignment); otherwise every channel gets the
/// largest modulus, the tightest bound valid for any selected channel.
std::vector<Natural> moduli_hypothesis(const ModuliSet& m, std::size_t channels);

/// Thresholds of 2^(8w): what an adversary without the moduli can assume.
std::vector<Natural> uninformed_hypothesis(const std::vector<std::size_t>& cell_widths);

/// Probability that k uniform cells of `width` bytes all fall below q.
double miss_probability(const Natural& q, std::size_t width, std::size_t k);

// ---------------------------------------------------------------------------
// Reduction

/// Turns a residue-channel attack into a cipher attack: picks S fresh
/// coprime moduli, splits the ciphertext integer over them and hands the
/// result to `crt_breaker(moduli, residues)`.
template <typename Breaker>
auto cipher_breaker_reduction(const SuperBlock& ciphertext, std::size_t channels,
                              std::uint64_t seed, Breaker&& crt_breaker) {
   const ModuliSet m = gen_moduli(8 * ciphertext.size(), channels, seed);
   const ResidueVector r = crt_split(superblock_to_natural(ciphertext), m);
   return crt_breaker(m, r);
}

// ---------------------------------------------------------------------------
// Text reports (6 significant digits)

std::string format_bandwidth_table(const std::vector<BandwidthReport>& rows);
std::string format_smax_table(const std::vector<std::size_t>& superblock_bits);
std::string format_distinguisher(const DistinguisherReport& report);
std::string format_independence(const JointTable& table);
std::string format_verdicts(const std::vector<ChannelVerdict>& verdicts);

}  // namespace crtmux
