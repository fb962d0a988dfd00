#pragma once

#include <cstddef>
#include <functional>

#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::nd {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
    // Coordinates where the difference quotients at step and step/2 disagree by
    // more than the tolerance: a kink inside the stencil or roundoff-dominated
    // differences. The oracle cannot judge these, so they are counted, not scored.
    std::size_t unresolved = 0;
};

/// Central-difference comparison of `gradient(point)` against `value` per
/// coordinate. Relative error is |a - n| / max(|a|, |n|, floor). Reports, never asserts.
/// With `oracle_tolerance` > 0, unresolved coordinates are skipped and the floor
/// is raised to the quotient's rounding error over the tolerance; <= 0 scores every
/// coordinate against the plain floor.
GradCheckResult grad_check(const std::function<double(const Tensor&)>& value,
                           const std::function<Tensor(const Tensor&)>& gradient, const Tensor& point,
                           double step = 1e-5, double floor = 1e-6, double oracle_tolerance = 0.0);

/// Same, for a function built on a Graph from a single leaf.
GradCheckResult grad_check(const std::function<Var(Graph&, Var)>& build, const Tensor& point, double step = 1e-5,
                           double floor = 1e-6, double oracle_tolerance = 0.0);

}  // namespace gridcodec::nd
