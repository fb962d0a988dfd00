#include "gridcodec/eval/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridcodec::eval {

namespace {

void require_same_size(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size())
        throw std::invalid_argument("image sizes differ");
    if (a.rgb.empty()) throw std::invalid_argument("empty image");
}

constexpr int kWindow = 11;

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> g{};
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        total += g[i];
    }
    for (double& v : g) v /= total;
    return g;
}

}  // namespace

double mse(const Image& a, const Image& b) {
    require_same_size(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = a.rgb[i] - b.rgb[i];
        s += d * d;
    }
    return s / static_cast<double>(a.rgb.size());
}

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double ssim(const Image& a, const Image& b) {
    require_same_size(a, b);
    if (a.width < kWindow || a.height < kWindow) throw std::invalid_argument("ssim: image smaller than window");
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto g = gaussian_taps();
    const std::size_t w = a.width, h = a.height;
    const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;

    // Separable filtering of x, y, x^2, y^2, xy: horizontal pass then vertical.
    double total = 0.0;
    std::vector<double> horiz(5 * h * ow);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::array<double, 5> acc{};
                for (int k = 0; k < kWindow; ++k) {
                    const double p = a.at(x + k, y, c), q = b.at(x + k, y, c);
                    acc[0] += g[k] * p;
                    acc[1] += g[k] * q;
                    acc[2] += g[k] * p * p;
                    acc[3] += g[k] * q * q;
                    acc[4] += g[k] * p * q;
                }
                for (int m = 0; m < 5; ++m) horiz[(m * h + y) * ow + x] = acc[m];
            }
        }
        double channel = 0.0;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::array<double, 5> s{};
                for (int k = 0; k < kWindow; ++k)
                    for (int m = 0; m < 5; ++m) s[m] += g[k] * horiz[(m * h + y + k) * ow + x];
                const double mu_a = s[0], mu_b = s[1];
                const double var_a = s[2] - mu_a * mu_a, var_b = s[3] - mu_b * mu_b, cov = s[4] - mu_a * mu_b;
                channel += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            }
        }
        total += channel / static_cast<double>(ow * oh);
    }
    return total / 3.0;
}

}  // namespace gridcodec::eval
