#include "gridcodec/codec/ops.hpp"

#include <cmath>
#include <stdexcept>

#include "gridcodec/nd/ops.hpp"

namespace gridcodec::codec {

nd::Tensor quantize(const nd::Tensor& z, Phase phase, nd::Rng& rng) {
    nd::Tensor out = z;
    if (phase == Phase::eval) {
        for (double& v : out.storage()) v = std::round(v);
    } else {
        for (double& v : out.storage()) v += rng.uniform_open() - 0.5;
    }
    return out;
}

nd::Var quantize(nd::Var z, Phase phase, nd::Rng& rng) {
    nd::Graph& g = z.graph();
    if (phase == Phase::eval) return g.constant(quantize(z.value(), phase, rng));
    nd::Tensor noise(z.shape());
    for (double& v : noise.storage()) v = rng.uniform_open() - 0.5;
    return nd::add(z, g.constant(std::move(noise)));
}

nd::Tensor eval_mask(const nd::Tensor& logits) {
    if (logits.rank() != 3 || logits.dim(0) != 2) throw std::invalid_argument("mask logits must be 2 x h x w");
    const std::size_t area = logits.dim(1) * logits.dim(2);
    nd::Tensor m({logits.dim(1), logits.dim(2)});
    for (std::size_t j = 0; j < area; ++j) m[j] = logits[area + j] > logits[j] ? 1.0 : 0.0;
    return m;
}

nd::Var sample_mask(nd::Var logits, double tau, nd::Rng& rng, Phase phase) {
    if (!(tau > 0.0)) throw std::invalid_argument("sample_mask: tau must be positive");
    const nd::Tensor& lv = logits.value();
    if (phase == Phase::eval) return logits.graph().constant(eval_mask(lv));
    if (lv.rank() != 3 || lv.dim(0) != 2) throw std::invalid_argument("mask logits must be 2 x h x w");
    const std::size_t area = lv.dim(1) * lv.dim(2);
    nd::Tensor m({lv.dim(1), lv.dim(2)});
    std::vector<double> soft_one(area);
    for (std::size_t j = 0; j < area; ++j) {
        const double a = lv[j] + rng.gumbel(), b = lv[area + j] + rng.gumbel();
        m[j] = b > a ? 1.0 : 0.0;
        // Softmax over the two perturbed logits at temperature tau.
        soft_one[j] = 1.0 / (1.0 + std::exp((a - b) / tau));
    }
    return logits.graph().record(
        std::move(m), {logits},
        [soft_one = std::move(soft_one), area, tau](const nd::Tensor& g, std::span<nd::Tensor* const> grads) {
            nd::Tensor& gl = *grads[0];
            for (std::size_t j = 0; j < area; ++j) {
                const double d = g[j] * soft_one[j] * (1.0 - soft_one[j]) / tau;
                gl[j] -= d;
                gl[area + j] += d;
            }
        },
        "sample_mask");
}

double anneal_tau(std::size_t step, std::size_t total, double tau_start, double tau_end) {
    if (step > total) throw std::invalid_argument("anneal_tau: step beyond total");
    if (step == total) return tau_end;
    if (total == 0) return tau_start;
    return tau_start * std::pow(tau_end / tau_start, static_cast<double>(step) / static_cast<double>(total));
}

nd::Var decode_plane(nd::Var latent, nd::Var mask, const DecoderVars& d, std::size_t height, std::size_t width) {
    const nd::Var masked = nd::mul_channel_mask(latent, mask);
    const nd::Var hidden = nd::selu(nd::conv_transpose2d(masked, d.w1, d.b1));
    return nd::center_crop(nd::conv_transpose2d(hidden, d.w2, d.b2), height, width);
}

nd::Tensor decode_plane(const nd::Tensor& latent, const nd::Tensor& mask, const DecoderParams& decoder,
                        std::size_t height, std::size_t width) {
    nd::Graph g;
    const DecoderVars d{g.constant(decoder.w1), g.constant(decoder.b1), g.constant(decoder.w2),
                        g.constant(decoder.b2)};
    return decode_plane(g.constant(latent), g.constant(mask), d, height, width).value();
}

nd::Var encode_plane(nd::Var plane, const EncoderVars& e) {
    const nd::Var hidden = nd::selu(nd::conv2d_stride2(plane, e.w1, e.b1));
    return nd::conv2d_stride2(hidden, e.w2, e.b2);
}

}  // namespace gridcodec::codec
