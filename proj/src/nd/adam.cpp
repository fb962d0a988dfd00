#include "gridcodec/nd/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gridcodec::nd {

double ExponentialDecay::at(std::size_t step) const {
    if (total_steps <= 1) return initial_lr;
    if (step + 1 >= total_steps) return initial_lr * end_ratio;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return initial_lr * std::pow(end_ratio, t);
}

AdamState::AdamState(std::vector<Shape> param_shapes, ExponentialDecay schedule, AdamOptions options)
    : schedule_(schedule), options_(options) {
    for (auto& s : param_shapes) {
        m_.emplace_back(s);
        v_.emplace_back(s);
    }
}

void AdamState::step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("adam step: expected " + std::to_string(m_.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != m_[i].shape() || grads[i]->shape() != m_[i].shape())
            throw std::invalid_argument("adam step: shape mismatch for parameter " + std::to_string(i));
        if (!grads[i]->all_finite())
            throw NonFiniteError("adam step aborted: non-finite gradient for parameter " + std::to_string(i));
    }

    const double lr = schedule_.at(step_);
    ++step_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < p.numel(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.epsilon);
        }
    }
}

}  // namespace gridcodec::nd
