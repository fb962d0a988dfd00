#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridcodec/codec/compress.hpp"
#include "gridcodec/container/bytes.hpp"
#include "gridcodec/container/format.hpp"
#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/scene.hpp"

namespace gridcodec::eval {

/// Mean test-view quality of a field.
struct ViewQuality {
    double psnr = 0.0;
    double ssim = 0.0;
};
ViewQuality test_view_quality(const field::RadianceField& field, const field::ViewSet& views,
                              bool quantize_8bit = false);

struct RdPoint {
    std::string config_id;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::size_t bytes_total = 0;
    std::size_t bytes_latents = 0;  // masks and latent streams
    std::size_t bytes_decoder = 0;
    std::size_t bytes_other = 0;  // config, other components and framing
    double psnr = 0.0;
    double ssim = 0.0;
    std::size_t iterations = 0;
    double wall_seconds = 0.0;
    double final_loss = 0.0;
    bool failed = false;
    std::string error;
};

/// Short identifier of the flags that distinguish a codec configuration.
std::string config_id(const codec::CodecConfig& config);

struct RdRun {
    RdPoint point;
    container::Bytes file;  // empty when the run failed
};

/// Compresses, writes the container, decodes it back and measures the test
/// views. Divergence is reported as a failed point rather than thrown.
RdRun run_rd_point(const field::RadianceField& pretrained, const field::ViewSet& views,
                   const codec::CodecConfig& config);

/// One point per lambda, ordered by lambda.
std::vector<RdPoint> rd_sweep(const field::RadianceField& pretrained, const field::ViewSet& views,
                              const codec::CodecConfig& config, std::vector<double> lambdas,
                              const std::function<void(const RdPoint&)>& on_point = {});

/// Pairs of lambda-adjacent successful points where size grows with lambda.
std::size_t size_inversions(std::span<const RdPoint> points);

inline constexpr const char* kCsvHeader =
    "config_id,lambda,seed,bytes_total,bytes_latents,bytes_decoder,bytes_other,psnr_db,ssim,iterations,wall_seconds";

/// Header plus one row per point; failed points have empty metric fields.
std::string rd_csv(std::span<const RdPoint> points, bool include_wall_time = true);

/// Two side-by-side panels: PSNR and SSIM against container size in MB, one polyline per curve.
std::string rd_svg(std::span<const std::vector<RdPoint>> curves);

}  // namespace gridcodec::eval
