#pragma once

#include <string>

#include "gridcodec/image.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::eval {

/// Binary PPM (P6), 8 bits per channel, values clamped to [0,1] and rounded.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

/// Binary PGM (P5) of an H x W tensor scaled from [lo, hi] to 0..255.
void write_pgm(const std::string& path, const nd::Tensor& map, double lo = 0.0, double hi = 1.0);

/// The image after an 8-bit round trip.
Image quantized_8bit(const Image& image);

}  // namespace gridcodec::eval
