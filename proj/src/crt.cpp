#include "crtmux/crt.hpp"

#include "crtmux/error.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace crtmux {

namespace mp = boost::multiprecision;

ModuliSet::ModuliSet(std::vector<Natural> moduli) : moduli_(std::move(moduli)) {
   for (std::size_t i = 0; i < moduli_.size(); ++i) {
      if (moduli_[i] <= 1)
         throw Error(Errc::InvariantViolation, "modulus must exceed 1");
      for (std::size_t j = 0; j < i; ++j)
         if (mp::gcd(moduli_[i], moduli_[j]) != 1)
            throw Error(Errc::NotCoprime, "moduli " + moduli_[j].str() + " and " +
                                              moduli_[i].str() + " share a factor");
   }

   bit_lengths_.reserve(moduli_.size());
   byte_widths_.reserve(moduli_.size());
   for (const auto& q : moduli_) {
      const auto l = ceil_log2(q);
      bit_lengths_.push_back(l);
      byte_widths_.push_back((l + 7) / 8);
      product_ *= q;
   }

   basis_.reserve(moduli_.size());
   for (const auto& q : moduli_) {
      const Natural cofactor = product_ / q;
      // gcd(cofactor mod q, q) = 1, so u is the inverse of cofactor mod q.
      ExtGcd eg = ext_gcd(cofactor % q, q);
      Integer inv = eg.u % q;
      if (inv < 0)
         inv += q;
      basis_.push_back(cofactor * inv);
   }
}

std::size_t ModuliSet::max_byte_width() const {
   return byte_widths_.empty() ? 0 : *std::max_element(byte_widths_.begin(), byte_widths_.end());
}

std::size_t ModuliSet::total_bits() const {
   return std::accumulate(bit_lengths_.begin(), bit_lengths_.end(), std::size_t{0});
}

ModuliSet ModuliSet::subset(const std::vector<std::size_t>& indices) const {
   std::vector<Natural> picked;
   picked.reserve(indices.size());
   for (auto i : indices) {
      if (i >= moduli_.size())
         throw Error(Errc::SizeMismatch, "modulus index out of range");
      picked.push_back(moduli_[i]);
   }
   return ModuliSet(std::move(picked));
}

ResidueVector crt_split(const Natural& x, const ModuliSet& m) {
   if (x.sign() < 0 || x >= m.product())
      throw Error(Errc::InputOutOfRange, "value is not below the moduli product");
   ResidueVector out;
   out.reserve(m.size());
   for (const auto& q : m.moduli())
      out.push_back(x % q);
   return out;
}

Natural crt_combine(const ResidueVector& rv, const ModuliSet& m) {
   if (rv.size() != m.size())
      throw Error(Errc::SizeMismatch, "residue count differs from moduli count");
   Natural acc = 0;
   for (std::size_t i = 0; i < rv.size(); ++i) {
      if (rv[i].sign() < 0 || rv[i] >= m[i])
         throw Error(Errc::ResidueOutOfRange,
                     "residue " + std::to_string(i) + " is not below its modulus");
      acc += rv[i] * m.basis()[i];
   }
   return acc % m.product();
}

ExtGcd ext_gcd(const Natural& a, const Natural& b) {
   if (a.is_zero() && b.is_zero())
      throw Error(Errc::BothZero, "gcd(0, 0) is undefined");
   Integer old_r = a, r = b;
   Integer old_s = 1, s = 0;
   Integer old_t = 0, t = 1;
   while (!r.is_zero()) {
      const Integer q = old_r / r;
      // Materialise each update; a lazy expression would read the moved-from value.
      old_r = std::exchange(r, Integer(old_r - q * r));
      old_s = std::exchange(s, Integer(old_s - q * s));
      old_t = std::exchange(t, Integer(old_t - q * t));
   }
   return {old_r, old_s, old_t};
}

namespace {

constexpr unsigned kSmallPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

const std::vector<std::uint64_t>& sieve_counts_by_bit_length() {
   static const std::vector<std::uint64_t> counts = [] {
      constexpr std::size_t kMaxBits = 20;
      const std::size_t limit = std::size_t{1} << kMaxBits;
      std::vector<bool> composite(limit, false);
      std::vector<std::uint64_t> by_len(kMaxBits + 1, 0);
      for (std::size_t n = 2; n < limit; ++n) {
         if (composite[n])
            continue;
         by_len[std::bit_width(n)]++;
         for (std::size_t k = n * n; k < limit; k += n)
            composite[k] = true;
      }
      return by_len;
   }();
   return counts;
}

double log_integral(double x) { return boost::math::expint(std::log(x)); }

Natural draw_candidate(std::size_t bits, Prng& prng) {
   Natural c = 0;
   for (std::size_t got = 0; got < bits; got += 32) {
      c <<= 32;
      c |= prng.next_u32();
   }
   c &= pow2(bits) - 1;
   mp::bit_set(c, bits - 1);
   if (bits >= 3)
      mp::bit_set(c, 0);
   return c;
}

}  // namespace

bool is_probable_prime(const Natural& n) {
   if (n < 2)
      return false;
   for (unsigned p : kSmallPrimes) {
      if (n == p)
         return true;
      if (n % p == 0)
         return false;
   }

   const Natural n_minus_1 = n - 1;
   Natural d = n_minus_1;
   std::size_t s = 0;
   while (!mp::bit_test(d, 0)) {
      d >>= 1;
      ++s;
   }

   for (unsigned a : kSmallPrimes) {
      Natural x = mp::powm(Natural(a), d, n);
      if (x == 1 || x == n_minus_1)
         continue;
      bool witness = true;
      for (std::size_t r = 1; r < s; ++r) {
         x = (x * x) % n;
         if (x == n_minus_1) {
            witness = false;
            break;
         }
      }
      if (witness)
         return false;
   }
   return true;
}

std::size_t moduli_bit_length(std::size_t superblock_bits, std::size_t channels) {
   if (channels == 0)
      throw Error(Errc::BadParameters, "channel count must be at least 1");
   return (superblock_bits + channels - 1) / channels + 1;
}

std::uint64_t primes_with_bit_length(std::size_t bits) {
   if (bits < 2)
      return 0;
   const auto& exact = sieve_counts_by_bit_length();
   if (bits < exact.size())
      return exact[bits];
   if (bits >= 64)
      return std::numeric_limits<std::uint64_t>::max();
   const double hi = std::ldexp(1.0, static_cast<int>(bits));
   const double lo = std::ldexp(1.0, static_cast<int>(bits - 1));
   return static_cast<std::uint64_t>(log_integral(hi) - log_integral(lo));
}

std::vector<Natural> generate_primes(std::size_t count, std::size_t bits, Prng& prng) {
   if (primes_with_bit_length(bits) < count)
      throw Error(Errc::NotEnoughPrimes, "fewer than " + std::to_string(count) + " primes have " +
                                             std::to_string(bits) + " bits");
   std::vector<Natural> primes;
   primes.reserve(count);
   while (primes.size() < count) {
      Natural c = draw_candidate(bits, prng);
      if (std::find(primes.begin(), primes.end(), c) != primes.end())
         continue;
      if (is_probable_prime(c))
         primes.push_back(std::move(c));
   }
   return primes;
}

ModuliSet gen_moduli(std::size_t superblock_bits, std::size_t channels, std::uint64_t seed,
                     std::size_t count) {
   if (channels < 1 || superblock_bits < 8)
      throw Error(Errc::BadParameters, "need N >= 8 and S >= 1");
   if (count == 0)
      count = channels;
   if (count < channels)
      throw Error(Errc::BadParameters, "cannot generate fewer moduli than channels");
   Prng prng(seed);
   return ModuliSet(generate_primes(count, moduli_bit_length(superblock_bits, channels), prng));
}

}  // namespace crtmux
