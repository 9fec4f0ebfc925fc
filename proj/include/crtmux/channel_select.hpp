#pragma once

#include "crtmux/crt.hpp"
#include "crtmux/prng.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace crtmux {

using ChannelId = std::uint32_t;

enum class AssignmentMode : std::uint8_t { Dynamic = 0, Static = 1 };

/// Selected channels in order of first acceptance, each mapped to an index
/// into the configured ModuliSet.
struct ChannelAssignment {
   std::vector<ChannelId> selected;
   std::map<ChannelId, std::size_t> modulus_of;

   bool is_selected(ChannelId c) const { return modulus_of.count(c) != 0; }

   friend bool operator==(const ChannelAssignment&, const ChannelAssignment&) = default;
};

/// Uniform index in [0, census) by rejection sampling on the top 32 bits of
/// each output. Throws GeneratorExhausted after 128 consecutive rejections.
std::uint32_t draw_uniform(Prng& prng, std::uint32_t census);

/// `count` distinct channel ids out of `census`; duplicates are redrawn.
std::vector<ChannelId> select_channels(Prng& prng, std::uint32_t census, std::uint32_t count);

/// Static mode: channel c uses modulus c, so |m| must equal the census.
/// Dynamic mode: selected[k] uses modulus k, so |m| must equal |selected|.
ChannelAssignment assign_moduli(AssignmentMode mode, const ModuliSet& m,
                                const std::vector<ChannelId>& selected, std::uint32_t census);

}  // namespace crtmux
