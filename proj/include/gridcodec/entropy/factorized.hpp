#pragma once

#include <cstddef>
#include <span>

#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::entropy {

/// Learned univariate CDF per latent channel, built from four stacked maps of
/// widths 1 -> 3 -> 3 -> 3 -> 1. Weights pass through softplus and the
/// per-stage nonlinearity x + tanh(a) tanh(x) has a positive slope, so every
/// channel's CDF is strictly increasing for any parameter values.
class FactorizedDensity {
public:
    static constexpr std::size_t kParamsPerChannel = 43;

    FactorizedDensity() = default;
    explicit FactorizedDensity(nd::Tensor params);

    /// Wide symmetric initial density (zero biases and gates, logit ~ x / init_scale).
    static FactorizedDensity initial(std::size_t channels, double init_scale = 10.0);

    std::size_t channels() const { return params_.empty() ? 0 : params_.dim(0); }
    const nd::Tensor& params() const { return params_; }
    nd::Tensor& params() { return params_; }

    double logit(std::size_t channel, double x) const;
    double cdf(std::size_t channel, double x) const;

    /// c(z + 1/2) - c(z - 1/2), evaluated in the tail that keeps it accurate.
    double likelihood(std::size_t channel, double z) const;

    /// -log2 likelihood, with the likelihood floored at kLikelihoodFloor.
    double bits(std::size_t channel, double z) const;

    static constexpr double kLikelihoodFloor = 1e-9;

private:
    nd::Tensor params_;  // channels x kParamsPerChannel
};

/// Logit of one channel's CDF from raw parameters, with optional gradients.
/// `dparams` (kParamsPerChannel entries) is accumulated with upstream * dlogit/dparams.
double cdf_logit(std::span<const double> params, double x, double* dlogit_dx = nullptr, double upstream = 0.0,
                 std::span<double> dparams = {});

/// -log2 p(z) and its derivatives w.r.t. z and (accumulated, scaled by upstream) the parameters.
double bits_with_grad(std::span<const double> params, double z, double* dbits_dz, double upstream,
                      std::span<double> dparams);

/// Total code length under the masked prior: locations with mask 1 pay
/// sum over channels of -log2 p(z); mask-0 locations pay nothing.
/// z is C x H x W, mask H x W (values 0/1), params C x kParamsPerChannel.
nd::Var masked_bits(nd::Var z, nd::Var mask, nd::Var params);

/// Evaluation-time total. Throws std::invalid_argument when a mask-0 location holds a nonzero latent.
double masked_bits(const nd::Tensor& z, const nd::Tensor& mask, const FactorizedDensity& density);

}  // namespace gridcodec::entropy
