#include "gridcodec/eval/bd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridcodec::eval {

namespace {

struct Xy {
    std::vector<double> x, y;
};

// Sorted by x.
Xy axes(std::span<const RatePoint> c, bool rate_on_x) {
    std::vector<std::pair<double, double>> p;
    for (const RatePoint& r : c) {
        if (!(r.bytes > 0.0)) throw std::invalid_argument("bd_metrics: sizes must be positive");
        const double lr = std::log10(r.bytes);
        p.emplace_back(rate_on_x ? lr : r.psnr, rate_on_x ? r.psnr : lr);
    }
    std::sort(p.begin(), p.end());
    Xy out;
    for (auto [x, y] : p) out.x.push_back(x), out.y.push_back(y);
    return out;
}

// Integral over [lo, hi] of the least-squares cubic through (x, y).
double cubic_integral(const Xy& d, double lo, double hi) {
    const Eigen::Index n = static_cast<Eigen::Index>(d.x.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) a(i, k) = std::pow(d.x[i], k);
        b(i) = d.y[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    auto antiderivative = [&](double x) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += c(k) * std::pow(x, k + 1) / (k + 1);
        return s;
    };
    return antiderivative(hi) - antiderivative(lo);
}

double linear_at(const Xy& d, double x) {
    const auto it = std::upper_bound(d.x.begin(), d.x.end(), x);
    std::size_t j = std::clamp<std::size_t>(it - d.x.begin(), 1, d.x.size() - 1);
    if (d.x[j] == d.x[j - 1]) return 0.5 * (d.y[j] + d.y[j - 1]);
    const double t = (x - d.x[j - 1]) / (d.x[j] - d.x[j - 1]);
    return d.y[j - 1] + t * (d.y[j] - d.y[j - 1]);
}

// Trapezoid integral of the piecewise-linear interpolant over [lo, hi].
double linear_integral(const Xy& d, double lo, double hi) {
    std::vector<double> knots{lo, hi};
    for (double x : d.x)
        if (x > lo && x < hi) knots.push_back(x);
    std::sort(knots.begin(), knots.end());
    double s = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i)
        s += 0.5 * (knots[i] - knots[i - 1]) * (linear_at(d, knots[i]) + linear_at(d, knots[i - 1]));
    return s;
}

// Mean difference test - reference over the common x range.
double mean_gap(const Xy& ref, const Xy& test, bool cubic) {
    const double lo = std::max(ref.x.front(), test.x.front());
    const double hi = std::min(ref.x.back(), test.x.back());
    if (!(hi > lo)) throw std::invalid_argument("bd_metrics: curves do not overlap");
    auto integral = [&](const Xy& d) { return cubic ? cubic_integral(d, lo, hi) : linear_integral(d, lo, hi); };
    return (integral(test) - integral(ref)) / (hi - lo);
}

}  // namespace

BdResult bd_metrics(std::span<const RatePoint> reference, std::span<const RatePoint> test) {
    if (reference.size() < 2 || test.size() < 2) throw std::invalid_argument("bd_metrics: need at least 2 points");
    BdResult r;
    r.cubic = reference.size() >= 4 && test.size() >= 4;
    r.psnr_delta = mean_gap(axes(reference, true), axes(test, true), r.cubic);
    r.rate_delta = (std::pow(10.0, mean_gap(axes(reference, false), axes(test, false), r.cubic)) - 1.0) * 100.0;
    return r;
}

double bytes_at_psnr(std::span<const RatePoint> curve, double psnr) {
    if (curve.size() < 2) throw std::invalid_argument("bytes_at_psnr: need at least 2 points");
    const Xy d = axes(curve, false);
    if (psnr < d.x.front() || psnr > d.x.back()) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(10.0, linear_at(d, psnr));
}

}  // namespace gridcodec::eval
