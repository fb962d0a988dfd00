#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "gridcodec/field/geometry.hpp"
#include "gridcodec/nd/rng.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::field {

/// Plane i spans axes (u, v) and pairs with a line over the remaining axis:
/// 0 = XY plane / Z line, 1 = XZ plane / Y line, 2 = YZ plane / X line.
inline constexpr std::array<std::array<int, 3>, 3> kPlaneAxes{{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};

struct FieldConfig {
    std::size_t plane_size = 64;  // H = W
    std::size_t line_size = 64;
    std::size_t density_channels = 4;
    std::size_t appearance_channels = 12;
    std::size_t shader_hidden = 32;
    std::size_t view_frequencies = 2;
    std::size_t samples_per_ray = 96;
    double density_scale = 25.0;

    std::size_t plane_channels() const { return density_channels + appearance_channels; }
    std::size_t shader_inputs() const { return 3 * appearance_channels + 3 + 6 * view_frequencies; }
};

/// Two ReLU hidden layers and a sigmoid RGB head. Weight matrices are (in x out).
struct ShaderParams {
    nd::Tensor w1, b1, w2, b2, w3, b3;

    std::array<const nd::Tensor*, 6> tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
    std::array<nd::Tensor*, 6> tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
};

/// Plane/line factorized radiance field. Each plane is channel-major
/// C x H x W with the density channels first, then appearance channels.
struct RadianceField {
    FieldConfig config;
    std::array<nd::Tensor, 3> planes;
    std::array<nd::Tensor, 3> lines;  // C x L
    ShaderParams shader;

    static RadianceField random_init(const FieldConfig& config, nd::Rng& rng);
};

/// Nonnegative density link: softplus(s) - ln 2 for s > 0, zero otherwise.
double density_link(double s);
double density_link_derivative(double s);

/// Sinusoidal encoding of a view direction: d, sin(2^k d), cos(2^k d).
void encode_direction(Vec3 d, std::size_t frequencies, double* out);

struct FieldSample {
    double sigma = 0.0;
    Vec3 rgb;
};

/// Evaluates the field at one point. Throws std::out_of_range outside [-1,1]^3.
FieldSample query_field(const RadianceField& field, Vec3 x, Vec3 d);

/// Continuous coordinate of world point x on plane i (u, v) and on line i (w), all in [0,1].
struct PlaneCoords {
    double u, v, w;
};
PlaneCoords project_to_plane(Vec3 x, std::size_t plane);

}  // namespace gridcodec::field
