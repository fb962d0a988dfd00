#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/render.hpp"
#include "gridcodec/field/scene.hpp"

namespace gridcodec::field {

struct PretrainOptions {
    std::size_t iterations = 5000;
    std::size_t batch_rays = 256;
    double grid_lr = 0.02;
    double network_lr = 1e-3;
    double lr_end_ratio = 0.1;
    /// Weight of a total-variation penalty on the planes (0 disables it).
    double plane_tv_weight = 1e-4;
    std::uint64_t seed = 1;
};

struct PretrainReport {
    std::size_t iterations = 0;
    double final_batch_loss = 0.0;
    double train_psnr = 0.0;
    double test_psnr = 0.0;
};

/// Every pixel ray of the listed views, with ground-truth targets.
RayBatch gather_rays(const ViewSet& views, const std::vector<std::size_t>& indices, std::size_t samples_per_ray);

/// Rays [indices] of `all` as a new batch.
RayBatch select_rays(const RayBatch& all, const std::vector<std::size_t>& indices);

/// Mean over views of per-view PSNR of the field's renders.
double mean_view_psnr(const FieldConfig& config, const FieldTensors& field, const ViewSet& views,
                      const std::vector<std::size_t>& indices);

/// Optimizes every field parameter against the render loss on random ray
/// batches from the training views. Throws nd::NonFiniteError on divergence.
PretrainReport pretrain_field(RadianceField& field, const ViewSet& views, const PretrainOptions& options,
                              const std::function<void(std::size_t, double)>& progress = {});

}  // namespace gridcodec::field
