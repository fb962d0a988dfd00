#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gridcodec/codec/config.hpp"
#include "gridcodec/entropy/factorized.hpp"
#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/rng.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::codec {

/// Two transposed-conv layers with a SELU between them.
struct DecoderParams {
    nd::Tensor w1, b1;  // latent x hidden x 3 x 3, hidden
    nd::Tensor w2, b2;  // hidden x plane_channels x 3 x 3, plane_channels

    std::array<nd::Tensor*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
    std::array<const nd::Tensor*, 4> tensors() const { return {&w1, &b1, &w2, &b2}; }
};

/// Mirror of the decoder made of two stride-2 convolutions.
struct EncoderParams {
    nd::Tensor w1, b1;  // hidden x plane_channels x 3 x 3, hidden
    nd::Tensor w2, b2;  // latent x hidden x 3 x 3, latent

    std::array<nd::Tensor*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
    std::array<const nd::Tensor*, 4> tensors() const { return {&w1, &b1, &w2, &b2}; }
};

struct PlaneDims {
    std::size_t channels = 0, height = 0, width = 0;
    std::size_t latent_height() const { return (height + 3) / 4; }
    std::size_t latent_width() const { return (width + 3) / 4; }
};

/// Everything trained during compression.
struct LatentState {
    PlaneDims dims;
    std::array<nd::Tensor, 3> latents;      // latent_channels x h x w
    std::array<nd::Tensor, 3> mask_logits;  // 2 x h x w: unnormalized log-probabilities of M = 0 and M = 1
    DecoderParams decoder;
    EncoderParams encoder;  // empty unless the encoder variant is enabled
    entropy::FactorizedDensity density;

    bool has_encoder() const { return !encoder.w1.empty(); }
};

/// Zero or small-Gaussian latents, logits favoring M = 1, seeded random
/// decoder/encoder weights with zero biases, and the initial symmetric density.
LatentState init_latents(const PlaneDims& dims, const CodecConfig& config, nd::Rng& rng);

}  // namespace gridcodec::codec
