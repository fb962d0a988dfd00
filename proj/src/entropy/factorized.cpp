#include "gridcodec/entropy/factorized.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>
#include <stdexcept>

namespace gridcodec::entropy {

namespace {

constexpr std::array<std::size_t, 5> kWidths{1, 3, 3, 3, 1};
constexpr std::size_t kStages = 4;
// Parameter layout per channel: weights of each stage, then biases, then gates.
constexpr std::array<std::size_t, 4> kWeightOffset{0, 3, 12, 21};
constexpr std::array<std::size_t, 4> kBiasOffset{24, 27, 30, 33};
constexpr std::array<std::size_t, 3> kGateOffset{34, 37, 40};

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Trace {
    std::array<std::array<double, 3>, kStages + 1> in{};  // stage inputs
    std::array<std::array<double, 3>, kStages> pre{};     // W v + b
};

// Parameter transforms that do not depend on x, computed once per channel.
struct Prepared {
    std::array<double, 24> weight{}, weight_slope{};  // softplus(h), sigmoid(h)
    std::array<double, 10> bias{};
    std::array<double, 9> gate{};  // tanh of the raw gate

    explicit Prepared(std::span<const double> p) {
        for (std::size_t i = 0; i < 24; ++i) {
            weight[i] = softplus(p[i]);
            weight_slope[i] = sigmoid(p[i]);
        }
        for (std::size_t i = 0; i < 10; ++i) bias[i] = p[24 + i];
        for (std::size_t i = 0; i < 9; ++i) gate[i] = std::tanh(p[34 + i]);
    }

    double forward(double x, Trace& t) const {
        t.in[0][0] = x;
        for (std::size_t k = 0; k < kStages; ++k) {
            const std::size_t n_in = kWidths[k], n_out = kWidths[k + 1];
            for (std::size_t i = 0; i < n_out; ++i) {
                double u = bias[kBiasOffset[k] - 24 + i];
                for (std::size_t j = 0; j < n_in; ++j) u += weight[kWeightOffset[k] + i * n_in + j] * t.in[k][j];
                t.pre[k][i] = u;
                t.in[k + 1][i] = k + 1 < kStages ? u + gate[kGateOffset[k] - 34 + i] * std::tanh(u) : u;
            }
        }
        return t.in[kStages][0];
    }

    // Returns d logit / dx and accumulates upstream * d logit / d params.
    double backward(const Trace& t, double upstream, std::span<double> dparams) const {
        std::array<double, 3> grad{1.0, 0.0, 0.0};
        for (std::size_t k = kStages; k-- > 0;) {
            const std::size_t n_in = kWidths[k], n_out = kWidths[k + 1];
            std::array<double, 3> du{};
            for (std::size_t i = 0; i < n_out; ++i) {
                if (k + 1 < kStages) {
                    const double g = gate[kGateOffset[k] - 34 + i];
                    const double th = std::tanh(t.pre[k][i]);
                    du[i] = grad[i] * (1.0 + g * (1.0 - th * th));
                    if (!dparams.empty()) dparams[kGateOffset[k] + i] += upstream * grad[i] * th * (1.0 - g * g);
                } else {
                    du[i] = grad[i];
                }
            }
            std::array<double, 3> dv{};
            for (std::size_t i = 0; i < n_out; ++i) {
                if (!dparams.empty()) dparams[kBiasOffset[k] + i] += upstream * du[i];
                for (std::size_t j = 0; j < n_in; ++j) {
                    const std::size_t w = kWeightOffset[k] + i * n_in + j;
                    dv[j] += weight[w] * du[i];
                    if (!dparams.empty()) dparams[w] += upstream * du[i] * t.in[k][j] * weight_slope[w];
                }
            }
            grad = dv;
        }
        return grad[0];
    }

    double bits(double z) const {
        Trace t;
        const double lo = forward(z - 0.5, t), hi = forward(z + 0.5, t);
        const double s = lo + hi > 0.0 ? -1.0 : 1.0;
        const double l = std::abs(sigmoid(s * hi) - sigmoid(s * lo));
        return -std::log2(std::max(l, FactorizedDensity::kLikelihoodFloor));
    }

    double bits_with_grad(double z, double* dbits_dz, double upstream, std::span<double> dparams) const {
        Trace tlo, thi;
        const double lo = forward(z - 0.5, tlo), hi = forward(z + 0.5, thi);
        const double s = lo + hi > 0.0 ? -1.0 : 1.0;
        const double sa = sigmoid(s * hi), sb = sigmoid(s * lo);
        const double diff = sa - sb;
        const double l = std::abs(diff);
        if (l < FactorizedDensity::kLikelihoodFloor) {
            if (dbits_dz) *dbits_dz = 0.0;
            return -std::log2(FactorizedDensity::kLikelihoodFloor);
        }
        const double q = diff >= 0.0 ? 1.0 : -1.0;
        // bits = -log2 l; dl/dhi = q s sa(1-sa), dl/dlo = -q s sb(1-sb).
        const double dbits_dl = -1.0 / (l * std::numbers::ln2);
        const double dbits_dhi = dbits_dl * q * s * sa * (1.0 - sa);
        const double dbits_dlo = -dbits_dl * q * s * sb * (1.0 - sb);
        const double dhi = backward(thi, upstream * dbits_dhi, dparams);
        const double dlo = backward(tlo, upstream * dbits_dlo, dparams);
        if (dbits_dz) *dbits_dz = dbits_dhi * dhi + dbits_dlo * dlo;
        return -std::log2(l);
    }
};

}  // namespace

FactorizedDensity::FactorizedDensity(nd::Tensor params) : params_(std::move(params)) {
    if (params_.rank() != 2 || params_.dim(1) != kParamsPerChannel)
        throw std::invalid_argument("factorized density parameters must be C x 43");
}

FactorizedDensity FactorizedDensity::initial(std::size_t channels, double init_scale) {
    nd::Tensor p({channels, kParamsPerChannel});
    const double per_stage = std::pow(init_scale, 1.0 / static_cast<double>(kStages));
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t k = 0; k < kStages; ++k) {
            const double w = std::log(std::expm1(1.0 / per_stage / static_cast<double>(kWidths[k])));
            for (std::size_t j = 0; j < kWidths[k] * kWidths[k + 1]; ++j)
                p[c * kParamsPerChannel + kWeightOffset[k] + j] = w;
        }
    }
    return FactorizedDensity(std::move(p));
}

double cdf_logit(std::span<const double> p, double x, double* dlogit_dx, double upstream,
                 std::span<double> dparams) {
    const Prepared prep(p);
    Trace t;
    const double out = prep.forward(x, t);
    if (dlogit_dx || !dparams.empty()) {
        const double dx = prep.backward(t, upstream, dparams);
        if (dlogit_dx) *dlogit_dx = dx;
    }
    return out;
}

double bits_with_grad(std::span<const double> p, double z, double* dbits_dz, double upstream,
                      std::span<double> dparams) {
    const Prepared prep(p);
    if (!dbits_dz && dparams.empty()) return prep.bits(z);
    return prep.bits_with_grad(z, dbits_dz, upstream, dparams);
}

double FactorizedDensity::logit(std::size_t channel, double x) const {
    return cdf_logit({params_.data() + channel * kParamsPerChannel, kParamsPerChannel}, x);
}

double FactorizedDensity::cdf(std::size_t channel, double x) const { return sigmoid(logit(channel, x)); }

double FactorizedDensity::likelihood(std::size_t channel, double z) const {
    const double lo = logit(channel, z - 0.5), hi = logit(channel, z + 0.5);
    const double s = lo + hi > 0.0 ? -1.0 : 1.0;
    return std::abs(sigmoid(s * hi) - sigmoid(s * lo));
}

double FactorizedDensity::bits(std::size_t channel, double z) const {
    return bits_with_grad({params_.data() + channel * kParamsPerChannel, kParamsPerChannel}, z, nullptr, 0.0, {});
}

namespace {

void check_shapes(const nd::Tensor& z, const nd::Tensor& mask, const nd::Tensor& params) {
    if (z.rank() != 3 || mask.rank() != 2 || mask.dim(0) != z.dim(1) || mask.dim(1) != z.dim(2))
        throw std::invalid_argument("masked_bits: latent is C x H x W and mask H x W");
    if (params.rank() != 2 || params.dim(0) != z.dim(0) || params.dim(1) != FactorizedDensity::kParamsPerChannel)
        throw std::invalid_argument("masked_bits: one density per latent channel");
}

}  // namespace

nd::Var masked_bits(nd::Var z, nd::Var mask, nd::Var params) {
    const nd::Tensor& zv = z.value();
    const nd::Tensor& mv = mask.value();
    const nd::Tensor& pv = params.value();
    check_shapes(zv, mv, pv);
    const std::size_t channels = zv.dim(0), area = mv.numel();
    constexpr std::size_t np = FactorizedDensity::kParamsPerChannel;

    // Per-location bit sums are kept for the mask gradient.
    std::vector<double> location_bits(area, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        const Prepared prep({pv.data() + c * np, np});
        for (std::size_t j = 0; j < area; ++j) {
            if (mv[j] == 0.0 && !z.graph().requires_grad(mask)) continue;
            const double b = prep.bits(zv[c * area + j]);
            location_bits[j] += b;
            total += mv[j] * b;
        }
    }
    return z.graph().record(
        nd::Tensor::scalar(total), {z, mask, params},
        [zv, mv, pv, location_bits, channels, area](const nd::Tensor& g, std::span<nd::Tensor* const> grads) {
            const double up = g[0];
            if (grads[1]) {
                for (std::size_t j = 0; j < area; ++j) (*grads[1])[j] += up * location_bits[j];
            }
            if (!grads[0] && !grads[2]) return;
            for (std::size_t c = 0; c < channels; ++c) {
                const Prepared prep({pv.data() + c * np, np});
                std::span<double> dp;
                if (grads[2]) dp = std::span<double>(grads[2]->data() + c * np, np);
                for (std::size_t j = 0; j < area; ++j) {
                    if (mv[j] == 0.0) continue;
                    double dz = 0.0;
                    prep.bits_with_grad(zv[c * area + j], &dz, up * mv[j], dp);
                    if (grads[0]) (*grads[0])[c * area + j] += up * mv[j] * dz;
                }
            }
        },
        "masked_bits");
}

double masked_bits(const nd::Tensor& z, const nd::Tensor& mask, const FactorizedDensity& density) {
    check_shapes(z, mask, density.params());
    const std::size_t area = mask.numel();
    double total = 0.0;
    constexpr std::size_t np = FactorizedDensity::kParamsPerChannel;
    for (std::size_t c = 0; c < z.dim(0); ++c) {
        const Prepared prep({density.params().data() + c * np, np});
        for (std::size_t j = 0; j < area; ++j) {
            const double v = z[c * area + j];
            if (mask[j] == 0.0) {
                if (v != 0.0) throw std::invalid_argument("masked_bits: nonzero latent at a masked-out location");
                continue;
            }
            total += prep.bits(v);
        }
    }
    return total;
}

}  // namespace gridcodec::entropy
