#include "crtmux/channel_select.hpp"

#include "crtmux/error.hpp"

#include <algorithm>

namespace crtmux {

std::uint32_t draw_uniform(Prng& prng, std::uint32_t census) {
   if (census == 0)
      throw Error(Errc::BadParameters, "census must be at least 1");
   const std::uint64_t span = std::uint64_t{1} << 32;
   const std::uint64_t limit = (span / census) * census;
   for (int attempt = 0; attempt < 128; ++attempt) {
      const std::uint64_t v = prng.next_u32();
      if (v < limit)
         return static_cast<std::uint32_t>(v % census);
   }
   throw Error(Errc::GeneratorExhausted, "128 consecutive rejections");
}

std::vector<ChannelId> select_channels(Prng& prng, std::uint32_t census, std::uint32_t count) {
   if (count < 1 || count > census)
      throw Error(Errc::BadParameters, "need 1 <= S <= A");
   std::vector<ChannelId> out;
   out.reserve(count);
   while (out.size() < count) {
      const ChannelId c = draw_uniform(prng, census);
      if (std::find(out.begin(), out.end(), c) == out.end())
         out.push_back(c);
   }
   return out;
}

ChannelAssignment assign_moduli(AssignmentMode mode, const ModuliSet& m,
                                const std::vector<ChannelId>& selected, std::uint32_t census) {
   ChannelAssignment a;
   a.selected = selected;
   switch (mode) {
      case AssignmentMode::Static:
         if (m.size() != census)
            throw Error(Errc::SizeMismatch, "static assignment needs one modulus per channel");
         for (ChannelId c : selected) {
            if (c >= census)
               throw Error(Errc::SizeMismatch, "channel id outside census");
            a.modulus_of[c] = c;
         }
         break;
      case AssignmentMode::Dynamic:
         if (m.size() != selected.size())
            throw Error(Errc::SizeMismatch, "dynamic assignment needs one modulus per selected channel");
         for (std::size_t k = 0; k < selected.size(); ++k) {
            if (selected[k] >= census)
               throw Error(Errc::SizeMismatch, "channel id outside census");
            a.modulus_of[selected[k]] = k;
         }
         break;
   }
   if (a.modulus_of.size() != selected.size())
      throw Error(Errc::InvariantViolation, "selected channels are not distinct");
   return a;
}

}  // namespace crtmux
