#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace crtmux {

using Bytes = std::vector<std::uint8_t>;

// Arbitrary-precision integer. Values held as Natural are never negative;
// Integer is used where signed results occur (Bezout coefficients).
using Natural = boost::multiprecision::cpp_int;
using Integer = boost::multiprecision::cpp_int;

/// Number of significant bits; 0 for zero.
std::size_t bit_length(const Natural& x);

/// ceil(log2 q) for q >= 1.
std::size_t ceil_log2(const Natural& q);

/// 2^bits.
Natural pow2(std::size_t bits);

/// Fixed-width big-endian encoding. Throws Overflow if x >= 2^(8*width).
Bytes to_bytes_be(const Natural& x, std::size_t width);

Natural from_bytes_be(std::span<const std::uint8_t> bytes);

}  // namespace crtmux
