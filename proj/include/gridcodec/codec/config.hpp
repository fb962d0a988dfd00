#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>

namespace gridcodec::codec {

enum class LatentInit { zeros, gaussian };
enum class TrainingMode { two_stage, end_to_end };

struct CodecConfig {
    std::string name = "desk-small";
    std::size_t latent_channels = 32;
    std::size_t hidden_channels = 16;
    double lambda = 1e-3;
    std::size_t iterations = 1500;
    std::size_t batch_rays = 256;
    double latent_lr = 0.02;    // latents and mask logits
    double network_lr = 1e-3;   // decoder, encoder, entropy model
    double lr_end_ratio = 0.1;
    bool use_mask = true;
    bool use_importance = true;
    bool use_encoder = false;
    LatentInit init = LatentInit::zeros;
    TrainingMode mode = TrainingMode::two_stage;
    double mask_logit_bias = 2.0;  // initial pi1 - pi0
    double gaussian_init_std = 0.01;
    double tau_start = 10.0;
    double tau_end = 0.1;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on a nonpositive lambda or iteration count.
    void validate() const;
};

/// Named channel presets: "high" (192/96), "low" (384/192), "desk-small" (32/16), "desk-large" (64/32).
CodecConfig preset(const std::string& name);

/// Overrides fields from `key = value` lines ('#' comments). Unknown keys and
/// malformed values throw std::invalid_argument.
void apply_config_text(CodecConfig& config, std::istream& in);

std::string to_string(LatentInit v);
std::string to_string(TrainingMode v);
LatentInit parse_latent_init(const std::string& s);
TrainingMode parse_training_mode(const std::string& s);

}  // namespace gridcodec::codec
