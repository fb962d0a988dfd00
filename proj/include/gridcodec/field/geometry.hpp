#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

namespace gridcodec::field {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend Vec3 operator*(double s, Vec3 a) { return a * s; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return a * (1.0 / norm(a)); }

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

/// Entry/exit parameters of a ray through the axis-aligned box [-1,1]^3, if it hits.
std::optional<std::pair<double, double>> intersect_unit_box(const Ray& ray);

/// Pinhole camera looking at the origin.
struct Camera {
    Vec3 position;
    Vec3 forward, right, up;
    double tan_half_fov = 0.4;
    std::size_t width = 64, height = 64;

    static Camera look_at_origin(Vec3 position, double fov_deg, std::size_t width, std::size_t height);

    /// Ray through the center of pixel (px, py); py grows downward.
    Ray pixel_ray(std::size_t px, std::size_t py) const;
};

}  // namespace gridcodec::field
