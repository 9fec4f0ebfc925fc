#pragma once

#include "crtmux/natural.hpp"
#include "crtmux/prng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace crtmux {

/// An ordered set of pairwise-coprime moduli together with the CRT basis
/// used to recombine residues.
///
/// Construction validates the moduli (each > 1, pairwise coprime) and
/// precomputes, for every modulus q_i, the basis element
/// e_i = (Q / q_i) * ((Q / q_i)^-1 mod q_i), so that e_i = 1 (mod q_i) and
/// e_i = 0 (mod q_j) for j != i. Immutable afterwards.
class ModuliSet {
public:
   ModuliSet() = default;

   /// Throws InvariantViolation if a modulus is <= 1, NotCoprime if two
   /// moduli share a factor.
   explicit ModuliSet(std::vector<Natural> moduli);

   std::size_t size() const { return moduli_.size(); }
   bool empty() const { return moduli_.empty(); }

   const std::vector<Natural>& moduli() const { return moduli_; }
   const Natural& operator[](std::size_t i) const { return moduli_[i]; }

   /// ceil(log2 q_i), in bits.
   const std::vector<std::size_t>& bit_lengths() const { return bit_lengths_; }
   /// ceil(bit_lengths[i] / 8), in bytes.
   const std::vector<std::size_t>& byte_widths() const { return byte_widths_; }
   std::size_t max_byte_width() const;
   /// Sum of bit_lengths.
   std::size_t total_bits() const;

   const Natural& product() const { return product_; }
   const std::vector<Natural>& basis() const { return basis_; }

   /// Moduli at the given indices, in the given order.
   ModuliSet subset(const std::vector<std::size_t>& indices) const;

   friend bool operator==(const ModuliSet& a, const ModuliSet& b) { return a.moduli_ == b.moduli_; }

private:
   std::vector<Natural> moduli_;
   std::vector<std::size_t> bit_lengths_;
   std::vector<std::size_t> byte_widths_;
   Natural product_ = 1;
   std::vector<Natural> basis_;
};

using ResidueVector = std::vector<Natural>;

/// Residues of x with respect to every modulus. Throws InputOutOfRange if
/// x >= m.product().
ResidueVector crt_split(const Natural& x, const ModuliSet& m);

/// The unique x in [0, m.product()) congruent to rv[i] modulo m[i].
/// Throws ResidueOutOfRange if some rv[i] >= m[i], SizeMismatch if the
/// lengths differ.
Natural crt_combine(const ResidueVector& rv, const ModuliSet& m);

struct ExtGcd {
   Natural gcd;
   Integer u;
   Integer v;
};

/// gcd(a, b) with Bezout coefficients: u*a + v*b = gcd. Throws BothZero.
ExtGcd ext_gcd(const Natural& a, const Natural& b);

/// Deterministic Miller-Rabin with the first thirteen prime bases: exact
/// below 3317044064679887385961981, never a false negative above it.
bool is_probable_prime(const Natural& n);

/// Bit length used for moduli of an N-bit superblock split over S
/// channels: ceil(N/S) + 1, which makes any S of them cover 2^N.
std::size_t moduli_bit_length(std::size_t superblock_bits, std::size_t channels);

/// Number of primes of exactly `bits` bits. Exact (sieve) for bits <= 20,
/// a logarithmic-integral estimate up to 63 bits, and saturated at
/// UINT64_MAX beyond.
std::uint64_t primes_with_bit_length(std::size_t bits);

/// `count` distinct primes of exactly `bits` bits drawn from `prng`.
/// Throws NotEnoughPrimes when fewer than `count` such primes exist.
std::vector<Natural> generate_primes(std::size_t count, std::size_t bits, Prng& prng);

/// S distinct primes of bit length ceil(N/S) + 1, deterministic in seed.
/// `count` overrides how many are generated (static assignment needs one
/// per available channel); it defaults to S. The seed is used as the
/// generator state directly; callers wanting the moduli seed domain pass
/// derive_prng(seed, SeedDomain::Moduli).state().
ModuliSet gen_moduli(std::size_t superblock_bits, std::size_t channels, std::uint64_t seed,
                     std::size_t count = 0);

}  // namespace crtmux
