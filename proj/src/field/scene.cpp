#include "gridcodec/field/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gridcodec/nd/rng.hpp"

namespace gridcodec::field {

void ToySceneSpec::validate() const {
    for (const Sphere& s : spheres) {
        if (!(s.radius > 0.0) || s.density < 0.0) throw std::invalid_argument("sphere needs radius > 0, density >= 0");
        for (std::size_t a = 0; a < 3; ++a) {
            if (std::abs(s.center[a]) + s.radius > 1.0)
                throw std::invalid_argument("sphere extends outside the [-1,1]^3 bounding box");
        }
    }
    if (camera_count < 2) throw std::invalid_argument("camera ring needs at least 2 poses");
    if (camera_radius <= std::sqrt(3.0)) throw std::invalid_argument("cameras must sit outside the bounding box");
    if (image_size < 11) throw std::invalid_argument("image_size must be at least 11");
    if (test_every < 2) throw std::invalid_argument("test_every must be >= 2");
}

ToySceneSpec make_toy_scene(std::uint64_t seed, std::size_t sphere_count) {
    ToySceneSpec spec;
    spec.seed = seed;
    nd::Rng rng(seed);
    for (std::size_t i = 0; i < sphere_count; ++i) {
        Sphere s;
        s.radius = rng.uniform(0.25, 0.4);
        const double reach = 0.85 - s.radius;
        s.center = {rng.uniform(-reach, reach), rng.uniform(-reach, reach), rng.uniform(-reach, reach)};
        s.albedo = {rng.uniform(0.15, 1.0), rng.uniform(0.15, 1.0), rng.uniform(0.15, 1.0)};
        s.density = rng.uniform(30.0, 60.0);
        spec.spheres.push_back(s);
    }
    return spec;
}

ToySceneSpec parse_scene_spec(std::istream& in) {
    ToySceneSpec spec;
    bool has_primitives = false;
    std::size_t random_count = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw std::invalid_argument("scene line " + std::to_string(line_no) + ": expected key = value");
        std::string key = line.substr(0, eq);
        key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char c) { return std::isspace(c); }), key.end());
        std::istringstream value(line.substr(eq + 1));
        auto fail = [&] { throw std::invalid_argument("scene line " + std::to_string(line_no) + ": bad value for " + key); };
        if (key == "seed") {
            if (!(value >> spec.seed)) fail();
        } else if (key == "sphere") {
            Sphere s;
            if (!(value >> s.center.x >> s.center.y >> s.center.z >> s.radius >> s.albedo.x >> s.albedo.y >>
                  s.albedo.z >> s.density))
                fail();
            spec.spheres.push_back(s);
            has_primitives = true;
        } else if (key == "random_spheres") {
            if (!(value >> random_count)) fail();
            has_primitives = true;
        } else if (key == "camera_count") {
            if (!(value >> spec.camera_count)) fail();
        } else if (key == "camera_radius") {
            if (!(value >> spec.camera_radius)) fail();
        } else if (key == "camera_elevation_deg") {
            if (!(value >> spec.camera_elevation_deg)) fail();
        } else if (key == "fov_deg") {
            if (!(value >> spec.fov_deg)) fail();
        } else if (key == "image_size") {
            if (!(value >> spec.image_size)) fail();
        } else if (key == "test_every") {
            if (!(value >> spec.test_every)) fail();
        } else {
            throw std::invalid_argument("scene line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!has_primitives) throw std::invalid_argument("scene file declares no primitives");
    if (random_count > 0) {
        const ToySceneSpec drawn = make_toy_scene(spec.seed, random_count);
        spec.spheres.insert(spec.spheres.end(), drawn.spheres.begin(), drawn.spheres.end());
    }
    spec.validate();
    return spec;
}

std::string format_scene_spec(const ToySceneSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "seed = " << spec.seed << '\n'
       << "camera_count = " << spec.camera_count << '\n'
       << "camera_radius = " << spec.camera_radius << '\n'
       << "camera_elevation_deg = " << spec.camera_elevation_deg << '\n'
       << "fov_deg = " << spec.fov_deg << '\n'
       << "image_size = " << spec.image_size << '\n'
       << "test_every = " << spec.test_every << '\n';
    for (const Sphere& s : spec.spheres) {
        os << "sphere = " << s.center.x << ' ' << s.center.y << ' ' << s.center.z << ' ' << s.radius << ' '
           << s.albedo.x << ' ' << s.albedo.y << ' ' << s.albedo.z << ' ' << s.density << '\n';
    }
    return os.str();
}

std::vector<std::size_t> ViewSet::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < is_test.size(); ++i)
        if (!is_test[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> ViewSet::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < is_test.size(); ++i)
        if (is_test[i]) out.push_back(i);
    return out;
}

std::vector<Camera> ring_cameras(const ToySceneSpec& spec) {
    std::vector<Camera> cams;
    const double elev = spec.camera_elevation_deg * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < spec.camera_count; ++i) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(spec.camera_count);
        const Vec3 pos{spec.camera_radius * std::cos(elev) * std::cos(phi),
                       spec.camera_radius * std::cos(elev) * std::sin(phi), spec.camera_radius * std::sin(elev)};
        cams.push_back(Camera::look_at_origin(pos, spec.fov_deg, spec.image_size, spec.image_size));
    }
    return cams;
}

Vec3 analytic_ray_color(const std::vector<Sphere>& spheres, const Ray& ray) {
    struct Span {
        double t0, t1;
        const Sphere* sphere;
    };
    std::vector<Span> spans;
    std::vector<double> cuts;
    for (const Sphere& s : spheres) {
        const Vec3 oc = ray.origin - s.center;
        const double b = dot(oc, ray.direction);
        const double disc = b * b - (dot(oc, oc) - s.radius * s.radius);
        if (disc <= 0.0) continue;
        const double root = std::sqrt(disc);
        const double t0 = std::max(0.0, -b - root), t1 = -b + root;
        if (t1 <= t0) continue;
        spans.push_back({t0, t1, &s});
        cuts.push_back(t0);
        cuts.push_back(t1);
    }
    std::sort(cuts.begin(), cuts.end());
    Vec3 color;
    double transmittance = 1.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b);
        double sigma = 0.0;
        Vec3 weighted;
        for (const Span& sp : spans) {
            if (mid > sp.t0 && mid < sp.t1) {
                sigma += sp.sphere->density;
                weighted = weighted + sp.sphere->albedo * sp.sphere->density;
            }
        }
        if (sigma <= 0.0) continue;
        const double absorbed = -std::expm1(-sigma * (b - a));
        color = color + weighted * (transmittance * absorbed / sigma);
        transmittance *= 1.0 - absorbed;
    }
    return color;
}

ViewSet generate_scene(const ToySceneSpec& spec) {
    spec.validate();
    ViewSet views;
    views.cameras = ring_cameras(spec);
    for (std::size_t i = 0; i < views.cameras.size(); ++i) {
        const Camera& cam = views.cameras[i];
        Image img(cam.width, cam.height);
        for (std::size_t y = 0; y < cam.height; ++y)
            for (std::size_t x = 0; x < cam.width; ++x) {
                const Vec3 c = analytic_ray_color(spec.spheres, cam.pixel_ray(x, y));
                img.at(x, y, 0) = c.x;
                img.at(x, y, 1) = c.y;
                img.at(x, y, 2) = c.z;
            }
        views.images.push_back(std::move(img));
        views.is_test.push_back(i % spec.test_every == spec.test_every - 1);
    }
    return views;
}

}  // namespace gridcodec::field
