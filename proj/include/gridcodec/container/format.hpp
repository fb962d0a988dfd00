#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "gridcodec/codec/compress.hpp"
#include "gridcodec/container/bytes.hpp"

namespace gridcodec::container {

/// File layout (all integers little-endian):
///
///   "GCDC" magic, u16 format version
///   5 sections in fixed order, each: u8 tag, u32 payload length, payload, u64 FNV-1a of payload
///     1 config   codec config, plane dims
///     2 masks    LZ( three h x w bitmaps, LSB-first, each padded to a byte )
///     3 latents  u16 channel count, u16 support per channel, then per plane:
///                u32 coded symbol count, u32 stream length, range-coded stream
///     4 decoder  LZ( four float32 tensors )
///     5 other    LZ( field config, three float32 line tensors, six float32
///                shader tensors, float32 entropy-model parameters )
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kMagicBytes = 6;          // magic + version
inline constexpr std::size_t kSectionFramingBytes = 13;  // tag + length + checksum

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

struct SizeReport {
    std::size_t config = 0, masks = 0, latents = 0, decoder = 0, other = 0;  // section payload bytes
    std::size_t framing = 0;  // magic, version and per-section framing
    std::size_t total = 0;    // file length

    std::size_t feature_planes() const { return masks + latents; }
    std::size_t other_components() const { return config + other; }
};

Bytes write_container(const codec::CompressedScene& scene);

/// Throws VersionError, ChecksumError or FormatError (truncation, bad layout).
codec::CompressedScene read_container(std::span<const std::uint8_t> file);

/// Per-section sizes of a valid container; checksums are verified.
SizeReport size_report(std::span<const std::uint8_t> file);

}  // namespace gridcodec::container
