#pragma once

#include <cstdint>

namespace crtmux {

/// Full-period 64-bit linear congruential generator.
///
/// state' = state * 6364136223846793005 + 1442695040888963407 (mod 2^64).
/// Both ends of a link run identical copies, so the recurrence is part of
/// the wire contract and must never change.
class Prng {
public:
   static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
   static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

   constexpr Prng() = default;
   constexpr explicit Prng(std::uint64_t state) : state_(state) {}

   /// Advances and returns the new state.
   constexpr std::uint64_t next() {
      state_ = state_ * kMultiplier + kIncrement;
      return state_;
   }

   /// Top 32 bits of the next output.
   constexpr std::uint32_t next_u32() { return static_cast<std::uint32_t>(next() >> 32); }

   constexpr std::uint64_t state() const { return state_; }

   friend constexpr bool operator==(const Prng&, const Prng&) = default;

private:
   std::uint64_t state_ = 0;
};

// Independent streams derived from one master seed.
enum class SeedDomain : std::uint64_t {
   ChannelSelect = 0x0101010101010101ULL,
   Moduli = 0x0202020202020202ULL,
   Decoy = 0x0303030303030303ULL,
   KeyMaterial = 0x0404040404040404ULL,
};

constexpr Prng derive_prng(std::uint64_t master_seed, SeedDomain domain) {
   return Prng(master_seed ^ static_cast<std::uint64_t>(domain));
}

}  // namespace crtmux
