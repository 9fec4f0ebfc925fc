#include "crtmux/natural.hpp"

#include "crtmux/error.hpp"

#include <algorithm>
#include <iterator>

namespace crtmux {

std::size_t bit_length(const Natural& x) {
   if (x.is_zero())
      return 0;
   return boost::multiprecision::msb(x) + 1;
}

std::size_t ceil_log2(const Natural& q) {
   if (q < 1)
      throw Error(Errc::Precondition, "ceil_log2 of zero");
   return bit_length(q - 1);
}

Natural pow2(std::size_t bits) {
   Natural r = 0;
   boost::multiprecision::bit_set(r, bits);
   return r;
}

Bytes to_bytes_be(const Natural& x, std::size_t width) {
   if (x.sign() < 0 || bit_length(x) > 8 * width)
      throw Error(Errc::Overflow, "value does not fit in " + std::to_string(width) + " bytes");
   Bytes out;
   out.reserve(width);
   if (!x.is_zero())
      boost::multiprecision::export_bits(x, std::back_inserter(out), 8);
   Bytes padded(width - out.size(), 0);
   padded.insert(padded.end(), out.begin(), out.end());
   return padded;
}

Natural from_bytes_be(std::span<const std::uint8_t> bytes) {
   Natural x = 0;
   if (!bytes.empty())
      boost::multiprecision::import_bits(x, bytes.begin(), bytes.end(), 8);
   return x;
}

}  // namespace crtmux
