#pragma once

#include <cstddef>
#include <vector>

namespace gridcodec {

/// Linear RGB image with values in [0,1], row-major, interleaved.
struct Image {
    std::size_t width = 0, height = 0;
    std::vector<double> rgb;

    Image() = default;
    Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0.0) {}

    double& at(std::size_t x, std::size_t y, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
    double at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
    friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace gridcodec
