#pragma once

#include <vector>

#include "gridcodec/image.hpp"

namespace gridcodec::eval {

/// 10 log10(1 / MSE) for images in [0,1]; +inf when identical.
double psnr(const Image& a, const Image& b);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over valid positions,
/// computed per channel and averaged. Images must be at least 11x11.
double ssim(const Image& a, const Image& b);

/// Mean squared error over all channels.
double mse(const Image& a, const Image& b);

}  // namespace gridcodec::eval
