#include "gridcodec/field/radiance_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gridcodec/nd/ops.hpp"

namespace gridcodec::field {

namespace {

nd::Tensor random_tensor(nd::Shape shape, double stddev, nd::Rng& rng) {
    nd::Tensor t(std::move(shape));
    for (double& v : t.storage()) v = stddev * rng.normal();
    return t;
}

}  // namespace

RadianceField RadianceField::random_init(const FieldConfig& config, nd::Rng& rng) {
    RadianceField f;
    f.config = config;
    const std::size_t c = config.plane_channels();
    for (std::size_t i = 0; i < 3; ++i) {
        f.planes[i] = random_tensor({c, config.plane_size, config.plane_size}, 0.1, rng);
        f.lines[i] = random_tensor({c, config.line_size}, 0.1, rng);
    }
    const std::size_t in = config.shader_inputs(), h = config.shader_hidden;
    f.shader.w1 = random_tensor({in, h}, std::sqrt(2.0 / static_cast<double>(in)), rng);
    f.shader.b1 = nd::Tensor({h});
    f.shader.w2 = random_tensor({h, h}, std::sqrt(2.0 / static_cast<double>(h)), rng);
    f.shader.b2 = nd::Tensor({h});
    f.shader.w3 = random_tensor({h, 3}, std::sqrt(1.0 / static_cast<double>(h)), rng);
    f.shader.b3 = nd::Tensor({3});
    return f;
}

double density_link(double s) {
    if (s <= 0.0) return 0.0;
    return s + std::log1p(std::exp(-s)) - std::numbers::ln2;
}

double density_link_derivative(double s) { return s > 0.0 ? 1.0 / (1.0 + std::exp(-s)) : 0.0; }

void encode_direction(Vec3 d, std::size_t frequencies, double* out) {
    out[0] = d.x;
    out[1] = d.y;
    out[2] = d.z;
    std::size_t o = 3;
    for (std::size_t k = 0; k < frequencies; ++k) {
        const double f = std::ldexp(1.0, static_cast<int>(k));
        for (std::size_t a = 0; a < 3; ++a) out[o++] = std::sin(f * d[a]);
        for (std::size_t a = 0; a < 3; ++a) out[o++] = std::cos(f * d[a]);
    }
}

PlaneCoords project_to_plane(Vec3 x, std::size_t plane) {
    const auto& axes = kPlaneAxes[plane];
    auto unit = [](double v) { return std::clamp(0.5 * (v + 1.0), 0.0, 1.0); };
    return {unit(x[axes[0]]), unit(x[axes[1]]), unit(x[axes[2]])};
}

FieldSample query_field(const RadianceField& field, Vec3 x, Vec3 d) {
    for (std::size_t a = 0; a < 3; ++a) {
        if (!(x[a] >= -1.0 && x[a] <= 1.0)) throw std::out_of_range("query_field: point outside [-1,1]^3");
    }
    const FieldConfig& cfg = field.config;
    const std::size_t channels = cfg.plane_channels();
    double s = 0.0;
    std::vector<double> input(cfg.shader_inputs());
    for (std::size_t i = 0; i < 3; ++i) {
        const PlaneCoords pc = project_to_plane(x, i);
        const nd::Tensor& plane = field.planes[i];
        const nd::Tensor& line = field.lines[i];
        const nd::BilinearCorners corners = nd::bilinear_corners(plane.dim(1), plane.dim(2), pc.u, pc.v);
        const std::size_t len = line.dim(1);
        const double g = pc.w * static_cast<double>(len - 1);
        const std::size_t i0 = std::min(static_cast<std::size_t>(g), len - 2);
        const double f = g - static_cast<double>(i0);
        const std::size_t area = plane.dim(1) * plane.dim(2);
        for (std::size_t c = 0; c < channels; ++c) {
            double pv = 0.0;
            for (int k = 0; k < 4; ++k) pv += corners.weight[k] * plane[c * area + corners.index[k]];
            const double lv = (1.0 - f) * line[c * len + i0] + f * line[c * len + i0 + 1];
            if (c < cfg.density_channels)
                s += pv * lv;
            else
                input[i * cfg.appearance_channels + (c - cfg.density_channels)] = pv * lv;
        }
    }
    FieldSample out;
    out.sigma = cfg.density_scale * density_link(s);
    encode_direction(d, cfg.view_frequencies, input.data() + 3 * cfg.appearance_channels);

    const ShaderParams& sh = field.shader;
    const std::size_t h = cfg.shader_hidden;
    std::vector<double> h1(h), h2(h);
    for (std::size_t j = 0; j < h; ++j) {
        double a = sh.b1[j];
        for (std::size_t i = 0; i < input.size(); ++i) a += input[i] * sh.w1[i * h + j];
        h1[j] = std::max(a, 0.0);
    }
    for (std::size_t j = 0; j < h; ++j) {
        double a = sh.b2[j];
        for (std::size_t i = 0; i < h; ++i) a += h1[i] * sh.w2[i * h + j];
        h2[j] = std::max(a, 0.0);
    }
    double rgb[3];
    for (std::size_t j = 0; j < 3; ++j) {
        double a = sh.b3[j];
        for (std::size_t i = 0; i < h; ++i) a += h2[i] * sh.w3[i * 3 + j];
        rgb[j] = 1.0 / (1.0 + std::exp(-a));
    }
    out.rgb = {rgb[0], rgb[1], rgb[2]};
    return out;
}

}  // namespace gridcodec::field
