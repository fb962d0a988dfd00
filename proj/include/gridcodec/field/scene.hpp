#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridcodec/field/geometry.hpp"
#include "gridcodec/image.hpp"

namespace gridcodec::field {

using gridcodec::Image;

/// Constant-density sphere with constant albedo.
struct Sphere {
    Vec3 center;
    double radius = 0.3;
    Vec3 albedo{1.0, 1.0, 1.0};
    double density = 50.0;
};

struct ToySceneSpec {
    std::uint64_t seed = 1;
    std::vector<Sphere> spheres;
    std::size_t camera_count = 32;
    double camera_radius = 4.0;
    double camera_elevation_deg = 30.0;
    double fov_deg = 40.0;
    std::size_t image_size = 64;
    std::size_t test_every = 4;  // every n-th ring camera is held out

    /// Throws std::invalid_argument when a primitive leaves [-1,1]^3 or the ring is degenerate.
    void validate() const;
};

/// Three spheres of random size, color and placement drawn from `seed`.
ToySceneSpec make_toy_scene(std::uint64_t seed, std::size_t sphere_count = 3);

/// Key-value scene file. Lines are `key = value`; `sphere = cx cy cz radius r g b density`
/// may repeat; `random_spheres = n` draws n spheres from `seed`. '#' starts a comment.
/// A file that declares neither spheres nor random_spheres is rejected.
ToySceneSpec parse_scene_spec(std::istream& in);
std::string format_scene_spec(const ToySceneSpec& spec);

struct ViewSet {
    std::vector<Camera> cameras;
    std::vector<Image> images;
    std::vector<bool> is_test;

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
};

/// Ring cameras of the spec, in ring order.
std::vector<Camera> ring_cameras(const ToySceneSpec& spec);

/// Exact color of a ray through the piecewise-constant sphere medium (black background).
Vec3 analytic_ray_color(const std::vector<Sphere>& spheres, const Ray& ray);

/// Ground-truth views rendered with the analytic integrator.
ViewSet generate_scene(const ToySceneSpec& spec);

}  // namespace gridcodec::field
