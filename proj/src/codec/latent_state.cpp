#include "gridcodec/codec/latent_state.hpp"

#include <cmath>

namespace gridcodec::codec {

namespace {

nd::Tensor uniform_weights(nd::Shape shape, double bound, nd::Rng& rng) {
    nd::Tensor t(std::move(shape));
    for (double& v : t.storage()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

LatentState init_latents(const PlaneDims& dims, const CodecConfig& config, nd::Rng& rng) {
    config.validate();
    if (dims.channels == 0 || dims.height == 0 || dims.width == 0) throw std::invalid_argument("empty plane dims");
    LatentState s;
    s.dims = dims;
    const std::size_t lc = config.latent_channels, hc = config.hidden_channels;
    const std::size_t h = dims.latent_height(), w = dims.latent_width();
    for (std::size_t i = 0; i < 3; ++i) {
        s.latents[i] = nd::Tensor({lc, h, w});
        if (config.init == LatentInit::gaussian)
            for (double& v : s.latents[i].storage()) v = config.gaussian_init_std * rng.normal();
        s.mask_logits[i] = nd::Tensor({2, h, w});
        for (std::size_t j = 0; j < h * w; ++j) s.mask_logits[i][h * w + j] = config.mask_logit_bias;
    }
    // Fan-in of a transposed layer counts the input channels it mixes per output.
    s.decoder.w1 = uniform_weights({lc, hc, 3, 3}, std::sqrt(3.0 / (lc * 9.0 / 4.0)), rng);
    s.decoder.b1 = nd::Tensor({hc});
    s.decoder.w2 = uniform_weights({hc, dims.channels, 3, 3}, std::sqrt(3.0 / (hc * 9.0 / 4.0)), rng);
    s.decoder.b2 = nd::Tensor({dims.channels});
    if (config.use_encoder) {
        s.encoder.w1 = uniform_weights({hc, dims.channels, 3, 3}, std::sqrt(3.0 / (dims.channels * 9.0)), rng);
        s.encoder.b1 = nd::Tensor({hc});
        s.encoder.w2 = uniform_weights({lc, hc, 3, 3}, std::sqrt(3.0 / (hc * 9.0)), rng);
        s.encoder.b2 = nd::Tensor({lc});
    }
    s.density = entropy::FactorizedDensity::initial(lc);
    return s;
}

}  // namespace gridcodec::codec
