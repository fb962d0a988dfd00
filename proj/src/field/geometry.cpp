#include "gridcodec/field/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace gridcodec::field {

std::optional<std::pair<double, double>> intersect_unit_box(const Ray& ray) {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.direction[a];
        if (std::abs(d) < 1e-15) {
            if (o < -1.0 || o > 1.0) return std::nullopt;
            continue;
        }
        double ta = (-1.0 - o) / d, tb = (1.0 - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return std::nullopt;
    return std::make_pair(t0, t1);
}

Camera Camera::look_at_origin(Vec3 position, double fov_deg, std::size_t width, std::size_t height) {
    Camera cam;
    cam.position = position;
    cam.forward = normalized(Vec3{} - position);
    const Vec3 world_up{0.0, 0.0, 1.0};
    cam.right = normalized(cross(cam.forward, world_up));
    cam.up = cross(cam.right, cam.forward);
    cam.tan_half_fov = std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
    cam.width = width;
    cam.height = height;
    return cam;
}

Ray Camera::pixel_ray(std::size_t px, std::size_t py) const {
    const double sx = ((static_cast<double>(px) + 0.5) / static_cast<double>(width) * 2.0 - 1.0) * tan_half_fov;
    const double sy = ((static_cast<double>(py) + 0.5) / static_cast<double>(height) * 2.0 - 1.0) * tan_half_fov;
    return {position, normalized(forward + right * sx - up * sy)};
}

}  // namespace gridcodec::field
