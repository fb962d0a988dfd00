#include "gridcodec/nd/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridcodec::nd {

GradCheckResult grad_check(const std::function<double(const Tensor&)>& value,
                           const std::function<Tensor(const Tensor&)>& gradient, const Tensor& point, double step,
                           double floor, double oracle_tolerance) {
    const Tensor analytic = gradient(point);
    require_same_shape(analytic, point, "grad_check");
    GradCheckResult result;
    Tensor probe = point;
    // Quotient at step h, and the error its two evaluations carry from rounding alone.
    auto central = [&](std::size_t i, double h, double* roundoff) {
        probe[i] = point[i] + h;
        const double up = value(probe);
        probe[i] = point[i] - h;
        const double down = value(probe);
        probe[i] = point[i];
        if (roundoff)
            *roundoff = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(up), std::abs(down)) / (2.0 * h);
        return (up - down) / (2.0 * h);
    };
    for (std::size_t i = 0; i < point.numel(); ++i) {
        double roundoff = 0.0;
        const double numeric = central(i, step, &roundoff);
        double resolution = floor;
        if (oracle_tolerance > 0.0) {
            const double half = central(i, 0.5 * step, nullptr);
            if (std::abs(half - numeric) > oracle_tolerance * std::max({std::abs(numeric), std::abs(half), floor})) {
                ++result.unresolved;
                continue;
            }
            // Disagreement below the rounding error of the quotient is not evidence against the gradient.
            resolution = std::max(floor, roundoff / oracle_tolerance);
        }
        ++result.checked;
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), resolution});
        const double err = std::abs(analytic[i] - numeric) / denom;
        if (err > result.max_rel_error || result.checked == 1) {
            result.max_rel_error = std::max(err, result.max_rel_error);
            result.worst_index = i;
            result.analytic = analytic[i];
            result.numeric = numeric;
        }
    }
    return result;
}

GradCheckResult grad_check(const std::function<Var(Graph&, Var)>& build, const Tensor& point, double step,
                           double floor, double oracle_tolerance) {
    auto value = [&](const Tensor& x) {
        Graph g;
        return build(g, g.leaf(x)).value()[0];
    };
    auto gradient = [&](const Tensor& x) {
        Graph g;
        Var leaf = g.leaf(x);
        g.backward(build(g, leaf));
        return g.grad(leaf);
    };
    return grad_check(value, gradient, point, step, floor, oracle_tolerance);
}

}  // namespace gridcodec::nd
