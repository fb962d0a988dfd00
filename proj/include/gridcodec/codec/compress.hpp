#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "gridcodec/codec/config.hpp"
#include "gridcodec/codec/latent_state.hpp"
#include "gridcodec/codec/ops.hpp"
#include "gridcodec/entropy/pmf.hpp"
#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/render.hpp"
#include "gridcodec/field/scene.hpp"

namespace gridcodec::codec {

/// Fixed inputs of the rate-distortion objective.
struct RdInputs {
    const field::FieldConfig* field_config = nullptr;
    /// Frozen reconstruction targets; all null drops the reconstruction term.
    std::array<const nd::Tensor*, 3> target_planes{};
    /// Per-plane H x W loss weights; null means unit weights.
    std::array<const nd::Tensor*, 3> weights{};
    const field::RayBatch* batch = nullptr;
    double lambda = 0.0;
    bool use_mask = true;
};

/// Graph handles of every trainable (or frozen) quantity the objective reads.
struct RdVars {
    std::array<nd::Var, 3> latents;
    std::array<nd::Var, 3> mask_logits;
    DecoderVars decoder;
    std::optional<EncoderVars> encoder;  // latents come from the target planes when set
    nd::Var density;
    std::array<nd::Var, 3> lines;
    std::array<nd::Var, 6> shader;
};

struct RdLoss {
    nd::Var total, render, recon, bits;
    std::array<nd::Var, 3> planes;  // decoded planes
};

/// L = render(P_hat) + sum_i ||(P_i - P_hat_i) * W_i||^2 + lambda * sum_i bits_i, with
/// bits the masked-prior code length of the quantized latents.
RdLoss rd_loss(const RdVars& vars, const RdInputs& inputs, Phase phase, double tau, nd::Rng& rng);

/// Leaves on `g` for the state (trainable) and field (trainable only when `train_field`).
RdVars make_rd_vars(nd::Graph& g, const LatentState& state, const field::RadianceField& field, bool train_field);

/// The quantized, self-contained representation written to a container.
struct CompressedScene {
    CodecConfig config;
    field::FieldConfig field_config;
    PlaneDims dims;
    std::array<nd::Tensor, 3> masks;    // h x w, 0/1
    std::array<nd::Tensor, 3> latents;  // integer valued, zero where masked out
    DecoderParams decoder;              // float32-representable values
    entropy::FactorizedDensity density;  // float32-representable values
    std::vector<int> supports;
    std::array<nd::Tensor, 3> lines;  // float32-representable values
    field::ShaderParams shader;       // float32-representable values

    std::vector<entropy::PmfTable> tables() const;
    /// Decodes the planes and assembles a renderable field.
    field::RadianceField reconstruct() const;
};

/// Rounds latents, hardens masks, zeroes masked-out latents and rounds every
/// stored real parameter to float32. `targets` feeds the encoder variant.
CompressedScene harden(const LatentState& state, const CodecConfig& config, const field::RadianceField& field);

struct CompressionReport {
    std::size_t iterations = 0;
    double last_render = 0.0, last_recon = 0.0, last_bits = 0.0, last_total = 0.0;
    /// Eval-mode objective on a fixed ray subset, render term rescaled to batch size.
    double final_loss = 0.0;
    double final_bits = 0.0;
};

struct CompressionResult {
    LatentState state;
    CompressedScene scene;
    field::RadianceField reconstruction;
    CompressionReport report;
};

/// Per-scene compression of a pretrained field (two-stage) or joint training
/// from `field` as initialization (end-to-end). Throws nd::NonFiniteError on divergence.
CompressionResult compress_scene(const field::RadianceField& field, const field::ViewSet& views,
                                 const CodecConfig& config,
                                 const std::function<void(std::size_t, const CompressionReport&)>& progress = {});

/// Eval-mode objective on `batch` for a trained state.
double evaluate_rd_loss(const LatentState& state, const field::RadianceField& field, const RdInputs& inputs,
                        bool use_mask);

}  // namespace gridcodec::codec
