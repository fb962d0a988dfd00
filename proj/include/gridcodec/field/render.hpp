#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "gridcodec/field/geometry.hpp"
#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/scene.hpp"
#include "gridcodec/nd/graph.hpp"

namespace gridcodec::field {

// ---------------------------------------------------------------------------
// Alpha compositing
// ---------------------------------------------------------------------------

struct CompositeResult {
    Vec3 color;
    double residual_transmittance = 1.0;
    std::vector<double> transmittance;  // T_i = prod_{j<i} (1 - alpha_j)
    std::vector<double> alpha;
    std::vector<double> weight;  // T_i * alpha_i
};

/// Front-to-back compositing with alpha_i = 1 - exp(-sigma_i delta_i). Throws on negative sigma or delta.
CompositeResult composite_ray(std::span<const double> sigma, std::span<const Vec3> rgb,
                              std::span<const double> delta);

/// Gradients of the composited color (contracted with `dcolor`) w.r.t. sigma and rgb. Accumulates.
void composite_ray_backward(std::span<const double> delta, std::span<const Vec3> rgb, const CompositeResult& fwd,
                            Vec3 dcolor, std::span<double> dsigma, std::span<Vec3> drgb);

/// Graph op: sigma (N), rgb (N x 3) -> color (3).
nd::Var composite_ray(nd::Var sigma, nd::Var rgb, std::vector<double> delta);

// ---------------------------------------------------------------------------
// Ray batches
// ---------------------------------------------------------------------------

/// Rays with uniform midpoint samples over their [-1,1]^3 segment. Rays that
/// miss the box carry zero samples.
struct RayBatch {
    std::vector<Ray> rays;
    std::vector<double> t_near;
    std::vector<double> spacing;  // delta, constant per ray; 0 for a miss
    std::vector<double> target;   // ground-truth RGB, 3 per ray (may be empty)
    std::size_t samples_per_ray = 0;

    std::size_t size() const { return rays.size(); }
    bool hits(std::size_t r) const { return spacing[r] > 0.0; }
    /// Sample k of ray r, clamped into the box against rounding.
    Vec3 sample_position(std::size_t r, std::size_t k) const;
};

RayBatch make_ray_batch(std::vector<Ray> rays, std::size_t samples_per_ray, std::vector<double> target = {});

/// All pixels of one view, row-major, with the image as target when given.
RayBatch view_rays(const Camera& camera, std::size_t samples_per_ray, const Image* target = nullptr);

// ---------------------------------------------------------------------------
// Batched field rendering
// ---------------------------------------------------------------------------

/// Read-only view of field parameters (planes may be decoded reconstructions).
struct FieldTensors {
    std::array<const nd::Tensor*, 3> planes{};
    std::array<const nd::Tensor*, 3> lines{};
    std::array<const nd::Tensor*, 6> shader{};

    static FieldTensors of(const RadianceField& field);
};

/// Gradient sinks; null entries are skipped.
struct FieldGrads {
    std::array<nd::Tensor*, 3> planes{};
    std::array<nd::Tensor*, 3> lines{};
    std::array<nd::Tensor*, 6> shader{};
};

/// One forward render of a batch, keeping what backward needs. The batch must
/// outlive the pass. Samples with zero density are never shaded: their weight
/// and density gradient are both zero.
class RenderPass {
public:
    RenderPass(const FieldConfig& config, const FieldTensors& field, const RayBatch& batch);

    const std::vector<double>& colors() const { return colors_; }
    std::size_t shaded_samples() const { return alive_.size(); }

    /// Per-sample density and composited weight, ray-major (size rays * samples_per_ray).
    const std::vector<double>& sigma() const { return sigma_; }
    const std::vector<double>& weights() const { return weight_; }

    void backward(std::span<const double> dcolors, const FieldGrads& grads) const;

private:
    struct Lookup {
        std::array<std::array<std::size_t, 4>, 3> corner_index;
        std::array<std::array<double, 4>, 3> corner_weight;
        std::array<std::size_t, 3> line_index;
        std::array<double, 3> line_frac;
    };
    Lookup lookup(std::size_t ray, std::size_t k) const;

    FieldConfig config_;
    FieldTensors field_;
    const RayBatch& batch_;
    std::vector<double> colors_;
    std::vector<double> sigma_, density_feature_, alpha_, transmittance_, weight_;
    std::vector<std::size_t> alive_;  // flat sample ids with sigma > 0
    std::vector<double> plane_values_, line_values_;  // alive x 3 x C
    std::vector<double> x_, h1_, h2_, rgb_;          // shader activations for alive samples
};

/// Graph node producing rays x 3 colors. Any of the inputs may be constants.
struct FieldVars {
    std::array<nd::Var, 3> planes;
    std::array<nd::Var, 3> lines;
    std::array<nd::Var, 6> shader;
};
nd::Var render_rays(const FieldConfig& config, const FieldVars& field, const RayBatch& batch);

/// Sum over rays of the squared color error against batch.target.
nd::Var render_loss(const FieldConfig& config, const FieldVars& field, const RayBatch& batch);

/// Forward-only helpers.
std::vector<double> render_colors(const FieldConfig& config, const FieldTensors& field, const RayBatch& batch);
Image render_view(const FieldConfig& config, const FieldTensors& field, const Camera& camera);
inline Image render_view(const RadianceField& field, const Camera& camera) {
    return render_view(field.config, FieldTensors::of(field), camera);
}

}  // namespace gridcodec::field
