#pragma once

#include <cstddef>
#include <vector>

#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::nd {

/// Exponential learning-rate decay: lr0 at step 0, lr0 * end_ratio at step total_steps - 1.
struct ExponentialDecay {
    double initial_lr = 1e-3;
    double end_ratio = 0.1;
    std::size_t total_steps = 1;

    double at(std::size_t step) const;
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam over a fixed list of parameter tensors (one learning-rate schedule per state).
class AdamState {
public:
    AdamState(std::vector<Shape> param_shapes, ExponentialDecay schedule, AdamOptions options = {});

    /// Applies one update in place. Throws NonFiniteError, leaving params and
    /// moments untouched, if any gradient is NaN/Inf.
    void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads);

    std::size_t step_count() const { return step_; }
    double current_lr() const { return schedule_.at(step_); }
    const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
    const Tensor& second_moment(std::size_t i) const { return v_.at(i); }

private:
    ExponentialDecay schedule_;
    AdamOptions options_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t step_ = 0;
};

}  // namespace gridcodec::nd
