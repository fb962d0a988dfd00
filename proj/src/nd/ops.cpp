#include "gridcodec/nd/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gridcodec::nd {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

Tensor& accumulate(Tensor* grad, const Tensor& delta) {
    *grad += delta;
    return *grad;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                                    shape_str(t.shape()));
    }
}

template <typename Fn, typename DFn>
Var unary(Var x, const char* name, Fn f, DFn df) {
    const Tensor& in = x.value();
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
    return x.graph().record(std::move(out), {x}, [x, df](const Tensor& g, std::span<Tensor* const> grads) {
        const Tensor& in = x.value();
        Tensor& gx = *grads[0];
        for (std::size_t i = 0; i < in.numel(); ++i) gx[i] += g[i] * df(in[i]);
    }, name);
}

}  // namespace

Var add(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    out += b.value();
    return a.graph().record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> grads) {
        if (grads[0]) accumulate(grads[0], g);
        if (grads[1]) accumulate(grads[1], g);
    }, "add");
}

Var sub(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
    return a.graph().record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> grads) {
        if (grads[0]) accumulate(grads[0], g);
        if (grads[1]) {
            Tensor& gb = *grads[1];
            for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
        }
    }, "sub");
}

Var mul(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor& g, std::span<Tensor* const> grads) {
        const Tensor& av = a.value();
        const Tensor& bv = b.value();
        if (grads[0]) {
            for (std::size_t i = 0; i < g.numel(); ++i) (*grads[0])[i] += g[i] * bv[i];
        }
        if (grads[1]) {
            for (std::size_t i = 0; i < g.numel(); ++i) (*grads[1])[i] += g[i] * av[i];
        }
    }, "mul");
}

Var scale(Var a, double s) {
    Tensor out = a.value();
    out *= s;
    return a.graph().record(std::move(out), {a}, [s](const Tensor& g, std::span<Tensor* const> grads) {
        Tensor& ga = *grads[0];
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += s * g[i];
    }, "scale");
}

Var square(Var a) {
    return unary(a, "square", [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

double selu_value(double x) { return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x); }

double selu_derivative(double x) { return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x); }

Var selu(Var x) { return unary(x, "selu", selu_value, selu_derivative); }

Var softplus(Var x) {
    return unary(
        x, "softplus", [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
        [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var sum(Var a) {
    const Tensor& in = a.value();
    return a.graph().record(Tensor::scalar(in.sum()), {a}, [](const Tensor& g, std::span<Tensor* const> grads) {
        Tensor& ga = *grads[0];
        const double gv = g[0];
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gv;
    }, "sum");
}

Var add_scalars(std::span<const Var> terms) {
    if (terms.empty()) throw std::invalid_argument("add_scalars: no terms");
    double total = 0.0;
    std::vector<Var> inputs(terms.begin(), terms.end());
    for (const Var& t : inputs) {
        if (t.value().numel() != 1) throw std::invalid_argument("add_scalars: non-scalar term");
        total += t.value()[0];
    }
    return inputs.front().graph().record(Tensor::scalar(total), inputs,
                                         [](const Tensor& g, std::span<Tensor* const> grads) {
                                             for (Tensor* gt : grads)
                                                 if (gt) (*gt)[0] += g[0];
                                         },
                                         "add_scalars");
}

Var mul_channel_mask(Var x, Var mask) {
    const Tensor& xv = x.value();
    const Tensor& mv = mask.value();
    require_rank(xv, 3, "mul_channel_mask");
    if (mv.rank() != 2 || mv.dim(0) != xv.dim(1) || mv.dim(1) != xv.dim(2)) {
        throw std::invalid_argument("mul_channel_mask: mask " + shape_str(mv.shape()) + " vs input " +
                                    shape_str(xv.shape()));
    }
    const std::size_t plane = mv.numel();
    Tensor out(xv.shape());
    for (std::size_t c = 0; c < xv.dim(0); ++c)
        for (std::size_t j = 0; j < plane; ++j) out[c * plane + j] = xv[c * plane + j] * mv[j];
    return x.graph().record(std::move(out), {x, mask}, [x, mask, plane](const Tensor& g, std::span<Tensor* const> grads) {
        const Tensor& xv = x.value();
        const Tensor& mv = mask.value();
        const std::size_t channels = xv.dim(0);
        if (grads[0]) {
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t j = 0; j < plane; ++j) (*grads[0])[c * plane + j] += g[c * plane + j] * mv[j];
        }
        if (grads[1]) {
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t j = 0; j < plane; ++j) (*grads[1])[j] += g[c * plane + j] * xv[c * plane + j];
        }
    }, "mul_channel_mask");
}

Var weighted_sq_error(Var pred, const Tensor& target, const Tensor& weight) {
    const Tensor& pv = pred.value();
    require_same_shape(pv, target, "weighted_sq_error");
    const bool weighted = !weight.empty();
    std::size_t plane = 1;
    if (weighted) {
        require_rank(pv, 3, "weighted_sq_error");
        if (weight.rank() != 2 || weight.dim(0) != pv.dim(1) || weight.dim(1) != pv.dim(2))
            throw std::invalid_argument("weighted_sq_error: weight map " + shape_str(weight.shape()) +
                                        " does not match " + shape_str(pv.shape()));
        plane = weight.numel();
    }
    // residual scaled by the squared weight, reused by backward
    Tensor scaled(pv.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < pv.numel(); ++i) {
        const double w = weighted ? weight[i % plane] : 1.0;
        const double r = (target[i] - pv[i]) * w;
        total += r * r;
        scaled[i] = r * w;
    }
    return pred.graph().record(Tensor::scalar(total), {pred},
                               [scaled = std::move(scaled)](const Tensor& g, std::span<Tensor* const> grads) {
                                   Tensor& gp = *grads[0];
                                   const double gv = g[0];
                                   for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] -= 2.0 * gv * scaled[i];
                               },
                               "weighted_sq_error");
}

Var total_variation(Var x) {
    const Tensor& xv = x.value();
    require_rank(xv, 3, "total_variation");
    const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx) {
                if (y + 1 < h) {
                    const double d = xv.at(k, y + 1, xx) - xv.at(k, y, xx);
                    total += d * d;
                }
                if (xx + 1 < w) {
                    const double d = xv.at(k, y, xx + 1) - xv.at(k, y, xx);
                    total += d * d;
                }
            }
    return x.graph().record(Tensor::scalar(total), {x}, [x](const Tensor& g, std::span<Tensor* const> grads) {
        const Tensor& xv = x.value();
        Tensor& gx = *grads[0];
        const double s = 2.0 * g[0];
        for (std::size_t k = 0; k < xv.dim(0); ++k)
            for (std::size_t y = 0; y < xv.dim(1); ++y)
                for (std::size_t xx = 0; xx < xv.dim(2); ++xx) {
                    if (y + 1 < xv.dim(1)) {
                        const double d = s * (xv.at(k, y + 1, xx) - xv.at(k, y, xx));
                        gx.at(k, y + 1, xx) += d;
                        gx.at(k, y, xx) -= d;
                    }
                    if (xx + 1 < xv.dim(2)) {
                        const double d = s * (xv.at(k, y, xx + 1) - xv.at(k, y, xx));
                        gx.at(k, y, xx + 1) += d;
                        gx.at(k, y, xx) -= d;
                    }
                }
    }, "total_variation");
}

Var center_crop(Var x, std::size_t out_h, std::size_t out_w) {
    const Tensor& xv = x.value();
    require_rank(xv, 3, "center_crop");
    const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (out_h > h || out_w > w) throw std::invalid_argument("center_crop: target larger than input");
    if (out_h == h && out_w == w) return x;
    const std::size_t oy = (h - out_h) / 2, ox = (w - out_w) / 2;
    Tensor out({c, out_h, out_w});
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < out_h; ++y)
            for (std::size_t xx = 0; xx < out_w; ++xx) out.at(k, y, xx) = xv.at(k, y + oy, xx + ox);
    return x.graph().record(std::move(out), {x}, [oy, ox](const Tensor& g, std::span<Tensor* const> grads) {
        Tensor& gx = *grads[0];
        for (std::size_t k = 0; k < g.dim(0); ++k)
            for (std::size_t y = 0; y < g.dim(1); ++y)
                for (std::size_t xx = 0; xx < g.dim(2); ++xx) gx.at(k, y + oy, xx + ox) += g.at(k, y, xx);
    }, "center_crop");
}

namespace {

// Column buffer layout shared by both conv directions: rows are (channel, ky, kx),
// columns are positions on the low-resolution grid (lh x lw). The high-resolution
// grid is hh x hw and a low-res position (iy, ix) touches hi-res (2iy-1+ky, 2ix-1+kx).
void scatter_cols(const RowMatrix& cols, std::size_t channels, std::size_t lh, std::size_t lw, std::size_t hh,
                  std::size_t hw, double* hi) {
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const auto row = static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx);
                for (std::size_t iy = 0; iy < lh; ++iy) {
                    const long y = 2 * static_cast<long>(iy) - 1 + static_cast<long>(ky);
                    if (y < 0 || y >= static_cast<long>(hh)) continue;
                    for (std::size_t ix = 0; ix < lw; ++ix) {
                        const long x = 2 * static_cast<long>(ix) - 1 + static_cast<long>(kx);
                        if (x < 0 || x >= static_cast<long>(hw)) continue;
                        hi[(c * hh + static_cast<std::size_t>(y)) * hw + static_cast<std::size_t>(x)] +=
                            cols(row, static_cast<Eigen::Index>(iy * lw + ix));
                    }
                }
            }
}

RowMatrix gather_cols(const double* hi, std::size_t channels, std::size_t lh, std::size_t lw, std::size_t hh,
                      std::size_t hw) {
    RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(channels * 9), static_cast<Eigen::Index>(lh * lw));
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const auto row = static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx);
                for (std::size_t iy = 0; iy < lh; ++iy) {
                    const long y = 2 * static_cast<long>(iy) - 1 + static_cast<long>(ky);
                    if (y < 0 || y >= static_cast<long>(hh)) continue;
                    for (std::size_t ix = 0; ix < lw; ++ix) {
                        const long x = 2 * static_cast<long>(ix) - 1 + static_cast<long>(kx);
                        if (x < 0 || x >= static_cast<long>(hw)) continue;
                        cols(row, static_cast<Eigen::Index>(iy * lw + ix)) =
                            hi[(c * hh + static_cast<std::size_t>(y)) * hw + static_cast<std::size_t>(x)];
                    }
                }
            }
    return cols;
}

void check_conv_transpose_args(const Tensor& in, const Tensor& w, const Tensor& b) {
    require_rank(in, 3, "conv_transpose2d input");
    require_rank(w, 4, "conv_transpose2d weight");
    if (w.dim(0) != in.dim(0))
        throw std::invalid_argument("conv_transpose2d: input has " + std::to_string(in.dim(0)) +
                                    " channels but weight expects " + std::to_string(w.dim(0)));
    if (w.dim(2) != 3 || w.dim(3) != 3) throw std::invalid_argument("conv_transpose2d: kernel must be 3x3");
    if (b.rank() != 1 || b.dim(0) != w.dim(1)) throw std::invalid_argument("conv_transpose2d: bias size mismatch");
}

}  // namespace

Tensor conv_transpose2d_forward(const Tensor& in, const Tensor& w, const Tensor& b) {
    check_conv_transpose_args(in, w, b);
    const std::size_t cin = in.dim(0), h = in.dim(1), wd = in.dim(2), cout = w.dim(1);
    const auto n = static_cast<Eigen::Index>(h * wd);
    ConstMatMap x(in.data(), static_cast<Eigen::Index>(cin), n);
    ConstMatMap wm(w.data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(cout * 9));
    const RowMatrix cols = wm.transpose() * x;
    Tensor out({cout, 2 * h, 2 * wd});
    for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t i = 0; i < 4 * h * wd; ++i) out[c * 4 * h * wd + i] = b[c];
    scatter_cols(cols, cout, h, wd, 2 * h, 2 * wd, out.data());
    return out;
}

Var conv_transpose2d(Var input, Var weight, Var bias) {
    Tensor out = conv_transpose2d_forward(input.value(), weight.value(), bias.value());
    return input.graph().record(std::move(out), {input, weight, bias},
        [input, weight](const Tensor& g, std::span<Tensor* const> grads) {
            const Tensor& in = input.value();
            const Tensor& w = weight.value();
            const std::size_t cin = in.dim(0), h = in.dim(1), wd = in.dim(2), cout = w.dim(1);
            const auto n = static_cast<Eigen::Index>(h * wd);
            const RowMatrix dcols = gather_cols(g.data(), cout, h, wd, 2 * h, 2 * wd);
            if (grads[0]) {
                ConstMatMap wm(w.data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(cout * 9));
                MatMap gx(grads[0]->data(), static_cast<Eigen::Index>(cin), n);
                gx.noalias() += wm * dcols;
            }
            if (grads[1]) {
                ConstMatMap x(in.data(), static_cast<Eigen::Index>(cin), n);
                MatMap gw(grads[1]->data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(cout * 9));
                gw.noalias() += x * dcols.transpose();
            }
            if (grads[2]) {
                const std::size_t plane = 4 * h * wd;
                for (std::size_t c = 0; c < cout; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) s += g[c * plane + i];
                    (*grads[2])[c] += s;
                }
            }
        },
        "conv_transpose2d");
}

Var conv2d_stride2(Var input, Var weight, Var bias) {
    const Tensor& in = input.value();
    const Tensor& w = weight.value();
    const Tensor& b = bias.value();
    require_rank(in, 3, "conv2d_stride2 input");
    require_rank(w, 4, "conv2d_stride2 weight");
    if (w.dim(1) != in.dim(0)) throw std::invalid_argument("conv2d_stride2: channel mismatch");
    if (w.dim(2) != 3 || w.dim(3) != 3) throw std::invalid_argument("conv2d_stride2: kernel must be 3x3");
    if (b.rank() != 1 || b.dim(0) != w.dim(0)) throw std::invalid_argument("conv2d_stride2: bias size mismatch");
    const std::size_t cin = in.dim(0), hh = in.dim(1), hw = in.dim(2), cout = w.dim(0);
    const std::size_t oh = (hh + 1) / 2, ow = (hw + 1) / 2;
    RowMatrix cols = gather_cols(in.data(), cin, oh, ow, hh, hw);
    ConstMatMap wm(w.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * 9));
    Tensor out({cout, oh, ow});
    MatMap om(out.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(oh * ow));
    om.noalias() = wm * cols;
    for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t i = 0; i < oh * ow; ++i) out[c * oh * ow + i] += b[c];
    return input.graph().record(std::move(out), {input, weight, bias},
        [input, weight, cols = std::move(cols)](const Tensor& g, std::span<Tensor* const> grads) {
            const Tensor& in = input.value();
            const Tensor& w = weight.value();
            const std::size_t cin = in.dim(0), hh = in.dim(1), hw = in.dim(2), cout = w.dim(0);
            const std::size_t oh = g.dim(1), ow = g.dim(2);
            ConstMatMap gm(g.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(oh * ow));
            if (grads[0]) {
                ConstMatMap wm(w.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * 9));
                const RowMatrix dcols = wm.transpose() * gm;
                scatter_cols(dcols, cin, oh, ow, hh, hw, grads[0]->data());
            }
            if (grads[1]) {
                MatMap gw(grads[1]->data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * 9));
                gw.noalias() += gm * cols.transpose();
            }
            if (grads[2]) {
                for (std::size_t c = 0; c < cout; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < oh * ow; ++i) s += g[c * oh * ow + i];
                    (*grads[2])[c] += s;
                }
            }
        },
        "conv2d_stride2");
}

BilinearCorners bilinear_corners(std::size_t height, std::size_t width, double u, double v) {
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
        throw std::out_of_range("bilinear sample coordinate (" + std::to_string(u) + ", " + std::to_string(v) +
                                ") outside [0,1]^2");
    }
    if (height < 2 || width < 2) throw std::invalid_argument("bilinear sampling needs a grid of at least 2x2");
    const double gx = u * static_cast<double>(width - 1);
    const double gy = v * static_cast<double>(height - 1);
    const std::size_t x0 = std::min(static_cast<std::size_t>(gx), width - 2);
    const std::size_t y0 = std::min(static_cast<std::size_t>(gy), height - 2);
    const double fx = gx - static_cast<double>(x0);
    const double fy = gy - static_cast<double>(y0);
    BilinearCorners c;
    c.index = {y0 * width + x0, y0 * width + x0 + 1, (y0 + 1) * width + x0, (y0 + 1) * width + x0 + 1};
    c.weight = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
    return c;
}

Var bilinear_sample(Var plane, double u, double v) {
    const Tensor& p = plane.value();
    require_rank(p, 3, "bilinear_sample");
    const std::size_t channels = p.dim(0), plane_size = p.dim(1) * p.dim(2);
    const BilinearCorners corners = bilinear_corners(p.dim(1), p.dim(2), u, v);
    Tensor out({channels});
    for (std::size_t c = 0; c < channels; ++c)
        for (int k = 0; k < 4; ++k) out[c] += corners.weight[k] * p[c * plane_size + corners.index[k]];
    return plane.graph().record(std::move(out), {plane},
                                [corners, plane_size](const Tensor& g, std::span<Tensor* const> grads) {
                                    Tensor& gp = *grads[0];
                                    for (std::size_t c = 0; c < g.numel(); ++c)
                                        for (int k = 0; k < 4; ++k)
                                            gp[c * plane_size + corners.index[k]] += corners.weight[k] * g[c];
                                },
                                "bilinear_sample");
}

}  // namespace gridcodec::nd
