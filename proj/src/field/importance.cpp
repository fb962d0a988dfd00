#include "gridcodec/field/importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcodec/field/render.hpp"
#include "gridcodec/nd/ops.hpp"

namespace gridcodec::field {

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        compensation_ += (sum_ - t) + x;
    else
        compensation_ += (x - t) + sum_;
    sum_ = t;
}

ImportanceAccumulator::ImportanceAccumulator(std::size_t plane_height, std::size_t plane_width)
    : height_(plane_height), width_(plane_width) {
    for (auto& c : cells_) c.resize(height_ * width_);
}

void ImportanceAccumulator::add(Vec3 x, double transmittance_alpha) {
    if (transmittance_alpha < 0.0) throw std::invalid_argument("importance contribution must be nonnegative");
    total_.add(transmittance_alpha);
    for (std::size_t i = 0; i < 3; ++i) {
        const PlaneCoords pc = project_to_plane(x, i);
        const nd::BilinearCorners c = nd::bilinear_corners(height_, width_, pc.u, pc.v);
        for (int q = 0; q < 4; ++q) {
            if (c.weight[q] != 0.0) cells_[i][c.index[q]].add(c.weight[q] * transmittance_alpha);
        }
    }
}

ImportanceMaps ImportanceAccumulator::finish() const {
    ImportanceMaps maps;
    for (std::size_t i = 0; i < 3; ++i) {
        maps.importance[i] = nd::Tensor({height_, width_});
        for (std::size_t j = 0; j < cells_[i].size(); ++j) maps.importance[i][j] = cells_[i][j].value();
    }
    maps.total_contribution = total_.value();
    return maps;
}

ImportanceMaps compute_importance(const RadianceField& field, const ViewSet& views) {
    const std::size_t h = field.planes[0].dim(1), w = field.planes[0].dim(2);
    for (const auto& p : field.planes) {
        if (p.dim(1) != h || p.dim(2) != w) throw std::invalid_argument("compute_importance: planes differ in size");
    }
    ImportanceAccumulator acc(h, w);
    const FieldTensors tensors = FieldTensors::of(field);
    for (std::size_t v : views.train_indices()) {
        const RayBatch batch = view_rays(views.cameras[v], field.config.samples_per_ray);
        const RenderPass pass(field.config, tensors, batch);
        const auto& weights = pass.weights();
        for (std::size_t r = 0; r < batch.size(); ++r) {
            for (std::size_t k = 0; k < batch.samples_per_ray; ++k) {
                const double tw = weights[r * batch.samples_per_ray + k];
                if (tw > 0.0) acc.add(batch.sample_position(r, k), tw);
            }
        }
    }
    ImportanceMaps maps = acc.finish();
    fill_weights(maps);
    return maps;
}

nd::Tensor importance_to_weights(const nd::Tensor& importance, double eps) {
    nd::Tensor w(importance.shape());
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t j = 0; j < importance.numel(); ++j) {
        if (importance[j] < 0.0) throw std::invalid_argument("importance must be nonnegative");
        w[j] = std::log(importance[j] + eps);
        lo = std::min(lo, w[j]);
        hi = std::max(hi, w[j]);
    }
    if (!(hi > lo)) {
        w.fill(1.0);
        return w;
    }
    for (double& v : w.storage()) v = (v - lo) / (hi - lo);
    return w;
}

void fill_weights(ImportanceMaps& maps, double eps) {
    for (std::size_t i = 0; i < 3; ++i) maps.weights[i] = importance_to_weights(maps.importance[i], eps);
}

}  // namespace gridcodec::field
