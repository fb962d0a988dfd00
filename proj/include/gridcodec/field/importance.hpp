#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gridcodec/field/geometry.hpp"
#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/scene.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::field {

/// Compensated (Neumaier) running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Per-plane rendering importance I (H x W, nonnegative) and loss weights W in [0,1].
struct ImportanceMaps {
    std::array<nd::Tensor, 3> importance;
    std::array<nd::Tensor, 3> weights;
    double total_contribution = 0.0;  // sum over samples of T_k * alpha_k
};

/// Splats sample importance onto the three planes with bilinear corner weights.
/// Accumulation is sequential and compensated, so results are bit-reproducible.
class ImportanceAccumulator {
public:
    ImportanceAccumulator(std::size_t plane_height, std::size_t plane_width);

    void add(Vec3 x, double transmittance_alpha);

    /// Importance maps only (weights left empty).
    ImportanceMaps finish() const;

private:
    std::size_t height_, width_;
    std::array<std::vector<CompensatedSum>, 3> cells_;
    CompensatedSum total_;
};

/// Importance of a frozen field over every pixel ray of the training views.
ImportanceMaps compute_importance(const RadianceField& field, const ViewSet& views);

/// W = minmax-normalize(log(I + eps)) per plane; a constant map becomes all ones.
nd::Tensor importance_to_weights(const nd::Tensor& importance, double eps = 0.01);
void fill_weights(ImportanceMaps& maps, double eps = 0.01);

}  // namespace gridcodec::field
