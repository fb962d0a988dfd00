#pragma once

#include <span>
#include <vector>

namespace gridcodec::eval {

struct RatePoint {
    double bytes = 0.0;
    double psnr = 0.0;
};

struct BdResult {
    double psnr_delta = 0.0;  // dB, test minus reference
    double rate_delta = 0.0;  // percent, test relative to reference
    bool cubic = true;        // false when a curve had fewer than 4 points
};

/// Bjontegaard deltas of `test` against `reference`: cubic fits of PSNR over
/// log10(bytes) (and the inverse) integrated over the overlapping interval.
/// Curves with fewer than 4 points use piecewise-linear integration instead.
/// Throws std::invalid_argument without overlap or with fewer than 2 points.
BdResult bd_metrics(std::span<const RatePoint> reference, std::span<const RatePoint> test);

/// Bytes at a given PSNR by piecewise-linear interpolation of log10(bytes)
/// over PSNR. NaN when `psnr` lies outside the curve's range.
double bytes_at_psnr(std::span<const RatePoint> curve, double psnr);

}  // namespace gridcodec::eval
