#include "crtmux/analysis.hpp"

#include "crtmux/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace crtmux {

BandwidthReport bandwidth_loss(std::size_t block_bits, std::size_t multiplier,
                               std::size_t channels) {
   if (block_bits < 1 || multiplier < 1 || channels < 1)
      throw Error(Errc::BadParameters, "bandwidth parameters must be positive");
   BandwidthReport r;
   r.superblock_bits = block_bits * multiplier;
   r.channels = channels;
   r.bits_per_channel = (r.superblock_bits + channels - 1) / channels;
   r.bytes_per_channel = (r.bits_per_channel + 7) / 8;
   const double carried = 8.0 * static_cast<double>(r.bytes_per_channel);
   r.loss_fraction = (carried - static_cast<double>(r.bits_per_channel)) / carried;
   return r;
}

std::size_t s_max_estimate(std::size_t superblock_bits) {
   if (superblock_bits < 8)
      throw Error(Errc::BadParameters, "N must be at least 8");
   std::size_t best = 0;
   for (std::size_t s = 1; s <= superblock_bits; ++s)
      if (primes_with_bit_length(moduli_bit_length(superblock_bits, s)) >= s)
         best = s;
   return best;
}

bool JointTable::flat() const {
   return std::all_of(counts.begin(), counts.end(), [](std::uint32_t c) { return c == 1; });
}

JointTable independence_check(std::uint32_t p, std::uint32_t q) {
   if (p < 1 || q < 1 || std::gcd(p, q) != 1)
      throw Error(Errc::NotCoprime, std::to_string(p) + " and " + std::to_string(q));
   const std::uint64_t cells = std::uint64_t{p} * q;
   if (cells > (std::uint64_t{1} << 20))
      throw Error(Errc::Precondition, "p*q exceeds the exhaustive limit of 2^20");

   JointTable t{p, q, std::vector<std::uint32_t>(cells, 0)};
   std::uint32_t y = 0, z = 0;
   for (std::uint64_t x = 0; x < cells; ++x) {
      ++t.counts[std::size_t{y} * q + z];
      if (++y == p)
         y = 0;
      if (++z == q)
         z = 0;
   }
   return t;
}

DistinguisherReport distinguishability(std::size_t superblock_bits, const ModuliSet& m) {
   if (m.empty() || m.product() < pow2(superblock_bits))
      throw Error(Errc::ProductTooSmall, "moduli product is below 2^N");
   DistinguisherReport r;
   r.superblock_bits = superblock_bits;
   r.total_bits = m.total_bits();
   const double exponent = static_cast<double>(superblock_bits) - static_cast<double>(r.total_bits);
   r.p_d_theoretical = 1.0 - std::ldexp(1.0, static_cast<int>(exponent));
   for (std::size_t i = 0; i < m.size(); ++i)
      r.per_channel_gap.push_back({m[i], pow2(m.bit_lengths()[i]) - m[i]});
   return r;
}

ScanResult invalid_residue_scan(std::span<const std::uint8_t> stream, std::size_t cell_width,
                                const Natural& q) {
   if (cell_width == 0 || stream.size() % cell_width != 0)
      throw Error(Errc::WidthMismatch, "stream is not a whole number of cells");
   ScanResult r;
   for (std::size_t off = 0; off < stream.size(); off += cell_width) {
      ++r.total;
      if (from_bytes_be(stream.subspan(off, cell_width)) >= q)
         ++r.invalid;
   }
   return r;
}

std::vector<ChannelVerdict> channel_classifier(const std::vector<Bytes>& streams,
                                               const std::vector<std::size_t>& cell_widths,
                                               const std::vector<Natural>& hypothesis) {
   if (streams.size() != cell_widths.size() || streams.size() != hypothesis.size())
      throw Error(Errc::Precondition, "one stream, width and threshold per channel");
   std::vector<ChannelVerdict> out;
   out.reserve(streams.size());
   for (ChannelId c = 0; c < streams.size(); ++c) {
      const auto& s = streams[c];
      const std::size_t w = cell_widths[c];
      if (w == 0 || s.size() % w != 0)
         throw Error(Errc::WidthMismatch, "channel " + std::to_string(c) + " stream is ragged");
      if (s.empty())
         throw Error(Errc::Precondition, "channel " + std::to_string(c) + " has no cells");

      ChannelVerdict v{c, Verdict::Real, s.size() / w, std::nullopt};
      for (std::size_t k = 0; k < v.cells; ++k) {
         if (from_bytes_be(std::span(s).subspan(k * w, w)) >= hypothesis[c]) {
            v.verdict = Verdict::Decoy;
            v.first_invalid_cell = k;
            break;
         }
      }
      out.push_back(v);
   }
   return out;
}

std::vector<Natural> moduli_hypothesis(const ModuliSet& m, std::size_t channels) {
   if (m.size() == channels)
      return m.moduli();
   const auto& ms = m.moduli();
   const Natural largest = *std::max_element(ms.begin(), ms.end());
   return std::vector<Natural>(channels, largest);
}

std::vector<Natural> uninformed_hypothesis(const std::vector<std::size_t>& cell_widths) {
   std::vector<Natural> out;
   out.reserve(cell_widths.size());
   for (auto w : cell_widths)
      out.push_back(pow2(8 * w));
   return out;
}

double miss_probability(const Natural& q, std::size_t width, std::size_t k) {
   const auto bits = static_cast<long>(8 * width);
   // q / 2^bits computed in floating point from the leading bits of q.
   const std::size_t qbits = bit_length(q);
   const std::size_t shift = qbits > 53 ? qbits - 53 : 0;
   const double mant = static_cast<Natural>(q >> shift).convert_to<double>();
   const double ratio = std::ldexp(mant, static_cast<int>(static_cast<long>(shift) - bits));
   return std::pow(ratio, static_cast<double>(k));
}

namespace {

std::ostringstream six_digits() {
   std::ostringstream os;
   os << std::setprecision(6);
   return os;
}

}  // namespace

std::string format_bandwidth_table(const std::vector<BandwidthReport>& rows) {
   auto os = six_digits();
   os << "L\tN\tS\tbits_per_channel\tbytes_per_channel\tloss_percent\n";
   for (const auto& r : rows)
      os << r.superblock_bits / kBlockBits << '\t' << r.superblock_bits << '\t' << r.channels
         << '\t' << r.bits_per_channel << '\t' << r.bytes_per_channel << '\t'
         << 100.0 * r.loss_fraction << '\n';
   return os.str();
}

std::string format_smax_table(const std::vector<std::size_t>& superblock_bits) {
   auto os = six_digits();
   os << "N\ts_max\ts_max_log2N_over_N\n";
   for (auto n : superblock_bits) {
      const auto s = s_max_estimate(n);
      os << n << '\t' << s << '\t'
         << static_cast<double>(s) * std::log2(static_cast<double>(n)) / static_cast<double>(n)
         << '\n';
   }
   return os.str();
}

std::string format_distinguisher(const DistinguisherReport& report) {
   auto os = six_digits();
   os << "N\t" << report.superblock_bits << '\n'
      << "L_total\t" << report.total_bits << '\n'
      << "p_d\t" << report.p_d_theoretical << '\n';
   if (report.empirical_detection_rate)
      os << "empirical_detection_rate\t" << *report.empirical_detection_rate << '\n';
   os << "channel\tmodulus\tgap\n";
   for (std::size_t i = 0; i < report.per_channel_gap.size(); ++i)
      os << i << '\t' << report.per_channel_gap[i].modulus << '\t' << report.per_channel_gap[i].gap
         << '\n';
   return os.str();
}

std::string format_independence(const JointTable& table) {
   auto os = six_digits();
   os << "p\t" << table.p << '\n'
      << "q\t" << table.q << '\n'
      << "cells\t" << table.counts.size() << '\n'
      << "flat\t" << (table.flat() ? "yes" : "no") << '\n'
      << "joint_probability\t" << 1.0 / static_cast<double>(table.counts.size()) << '\n';
   return os.str();
}

std::string format_verdicts(const std::vector<ChannelVerdict>& verdicts) {
   auto os = six_digits();
   os << "channel\tverdict\tcells\tfirst_invalid_cell\n";
   for (const auto& v : verdicts) {
      os << v.channel << '\t' << (v.verdict == Verdict::Real ? "real" : "decoy") << '\t' << v.cells
         << '\t';
      if (v.first_invalid_cell)
         os << *v.first_invalid_cell;
      else
         os << '-';
      os << '\n';
   }
   return os.str();
}

}  // namespace crtmux
