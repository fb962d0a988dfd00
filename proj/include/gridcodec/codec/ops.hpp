#pragma once

#include <array>
#include <cstddef>

#include "gridcodec/codec/latent_state.hpp"
#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/rng.hpp"

namespace gridcodec::codec {

enum class Phase { train, eval };

/// Train: z + u with u ~ U(-1/2, 1/2) drawn per entry. Eval: round half away from zero.
nd::Tensor quantize(const nd::Tensor& z, Phase phase, nd::Rng& rng);
/// Graph form; the noise is a constant so the gradient passes straight through.
nd::Var quantize(nd::Var z, Phase phase, nd::Rng& rng);

/// Binary mask (h x w) from logits (2 x h x w). Train: Gumbel-max sample in
/// the forward pass, gradient of the tau-tempered softmax probability of
/// M = 1 in the backward pass. Eval: argmax of the logits, ties to 0, no noise.
nd::Var sample_mask(nd::Var logits, double tau, nd::Rng& rng, Phase phase);
nd::Tensor eval_mask(const nd::Tensor& logits);

/// tau_start * (tau_end / tau_start)^(step / total).
double anneal_tau(std::size_t step, std::size_t total, double tau_start = 10.0, double tau_end = 0.1);

struct DecoderVars {
    nd::Var w1, b1, w2, b2;
};
struct EncoderVars {
    nd::Var w1, b1, w2, b2;
};

/// D(z_hat * M): mask broadcast across channels, two upsampling layers, then
/// a center crop to height x width.
nd::Var decode_plane(nd::Var latent, nd::Var mask, const DecoderVars& decoder, std::size_t height, std::size_t width);

/// Forward-only decode of a hardened latent.
nd::Tensor decode_plane(const nd::Tensor& latent, const nd::Tensor& mask, const DecoderParams& decoder,
                        std::size_t height, std::size_t width);

nd::Var encode_plane(nd::Var plane, const EncoderVars& encoder);

}  // namespace gridcodec::codec
