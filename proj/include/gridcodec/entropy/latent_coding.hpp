#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridcodec/entropy/pmf.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::entropy {

/// Support per channel: max |z| + 1 over the given latents, capped at kMaxSupport.
std::vector<int> latent_supports(std::span<const nd::Tensor* const> latents);

/// Range-codes integer latents (C x H x W) at mask-1 locations in (channel,
/// row, col) raster order with one table per channel. Values outside a
/// table's support are sent as the escape symbol followed by 32 raw bits of
/// the zigzag-mapped value. No coded symbols yields an empty stream.
std::vector<std::uint8_t> encode_latents(const nd::Tensor& latents, const nd::Tensor& mask,
                                         std::span<const PmfTable> tables);

/// Inverse of encode_latents; masked-out entries come back as exact zeros.
/// Throws CorruptStreamError when the stream does not match the mask.
nd::Tensor decode_latents(std::span<const std::uint8_t> stream, const nd::Tensor& mask, std::size_t channels,
                          std::span<const PmfTable> tables);

/// Sum of table code lengths over the symbols encode_latents would emit.
double table_code_length_bits(const nd::Tensor& latents, const nd::Tensor& mask, std::span<const PmfTable> tables);

}  // namespace gridcodec::entropy
