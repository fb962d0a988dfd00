#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "gridcodec/container/bytes.hpp"

namespace gridcodec::container {

/// Greedy LZ77 over a 32 KiB window with hash-chain match search.
///
/// Stream: mode byte (0 stored, 1 compressed), u32 raw length, then either the
/// raw bytes or a token sequence. A token byte t < 0x80 introduces t + 1
/// literals; t >= 0x80 is a match of length (t & 0x7f) + 4 followed by a u16
/// distance - 1. The stored mode caps expansion at 5 bytes.
inline constexpr std::size_t kLzWindow = 32768;
inline constexpr std::size_t kLzMinMatch = 4;
inline constexpr std::size_t kLzMaxMatch = 131;

Bytes lz_compress(std::span<const std::uint8_t> input);

/// Throws FormatError on any malformed stream.
Bytes lz_decompress(std::span<const std::uint8_t> stream);

}  // namespace gridcodec::container
