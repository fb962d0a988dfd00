#pragma once

#include <span>

#include "gridcodec/container/bytes.hpp"
#include "gridcodec/field/radiance_field.hpp"

namespace gridcodec::container {

/// Uncompressed float64 snapshot of a radiance field: "GCFD", u16 version,
/// field config, planes, lines, shader tensors, u64 FNV-1a of everything before it.
Bytes write_field(const field::RadianceField& field);

/// Throws FormatError (or a subclass) on a malformed or corrupted checkpoint.
field::RadianceField read_field(std::span<const std::uint8_t> file);

}  // namespace gridcodec::container
