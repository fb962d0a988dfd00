#pragma once

#include <array>
#include <cstddef>

#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::nd {

inline constexpr double kSeluScale = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var square(Var a);
Var selu(Var x);
Var softplus(Var x);

/// Sum of all entries -> scalar.
Var sum(Var a);

/// Sum of several scalars.
Var add_scalars(std::span<const Var> terms);

/// x (C x H x W) times mask (H x W), mask broadcast across channels.
Var mul_channel_mask(Var x, Var mask);

/// Sum of ((target - pred) * weight)^2 with weight (H x W) broadcast over
/// the channels of pred (C x H x W). `weight` may be empty for unit weights.
Var weighted_sq_error(Var pred, const Tensor& target, const Tensor& weight);

/// Sum of squared differences between vertically and horizontally adjacent
/// entries of a C x H x W tensor.
Var total_variation(Var x);

/// Center crop of a C x H x W tensor to C x out_h x out_w. The offset is
/// floor((H - out_h) / 2).
Var center_crop(Var x, std::size_t out_h, std::size_t out_w);

/// Transposed convolution, kernel 3, stride 2, padding 1, output padding 1.
/// input C_in x h x w, weight C_in x C_out x 3 x 3, bias C_out -> C_out x 2h x 2w.
Var conv_transpose2d(Var input, Var weight, Var bias);
Tensor conv_transpose2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Strided convolution, kernel 3, stride 2, padding 1.
/// input C_in x H x W, weight C_out x C_in x 3 x 3, bias C_out -> C_out x ceil(H/2) x ceil(W/2).
Var conv2d_stride2(Var input, Var weight, Var bias);

double selu_value(double x);
double selu_derivative(double x);

/// The four grid nodes surrounding a continuous plane coordinate.
struct BilinearCorners {
    std::array<std::size_t, 4> index{};  // flat y * W + x
    std::array<double, 4> weight{};
};

/// uv in [0,1]^2 maps onto the node grid with corners aligned: u -> x in [0, W-1], v -> y in [0, H-1].
BilinearCorners bilinear_corners(std::size_t height, std::size_t width, double u, double v);

/// Samples every channel of a C x H x W plane at uv. Throws on out-of-range uv.
Var bilinear_sample(Var plane, double u, double v);

}  // namespace gridcodec::nd
