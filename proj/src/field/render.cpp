#include "gridcodec/field/render.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <memory>
#include <cmath>
#include <stdexcept>

#include "gridcodec/nd/ops.hpp"

namespace gridcodec::field {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using ConstRowVec = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(const nd::Tensor& t) {
    return ConstMatMap(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

}  // namespace

// ---------------------------------------------------------------------------

CompositeResult composite_ray(std::span<const double> sigma, std::span<const Vec3> rgb, std::span<const double> delta) {
    const std::size_t n = sigma.size();
    if (rgb.size() != n || delta.size() != n) throw std::invalid_argument("composite_ray: length mismatch");
    CompositeResult r;
    r.transmittance.resize(n);
    r.alpha.resize(n);
    r.weight.resize(n);
    double t = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sigma[i] < 0.0 || delta[i] < 0.0) throw std::invalid_argument("composite_ray: negative density or spacing");
        const double a = -std::expm1(-sigma[i] * delta[i]);
        r.transmittance[i] = t;
        r.alpha[i] = a;
        r.weight[i] = t * a;
        r.color = r.color + rgb[i] * r.weight[i];
        t *= 1.0 - a;
    }
    r.residual_transmittance = t;
    return r;
}

void composite_ray_backward(std::span<const double> delta, std::span<const Vec3> rgb, const CompositeResult& fwd,
                            Vec3 dcolor, std::span<double> dsigma, std::span<Vec3> drgb) {
    const std::size_t n = delta.size();
    double behind = 0.0;  // sum_{j>i} w_j <dcolor, c_j>
    for (std::size_t i = n; i-- > 0;) {
        const double gc = dot(dcolor, rgb[i]);
        const double t_next = fwd.transmittance[i] * (1.0 - fwd.alpha[i]);
        if (!dsigma.empty()) dsigma[i] += delta[i] * (t_next * gc - behind);
        if (!drgb.empty()) drgb[i] = drgb[i] + dcolor * fwd.weight[i];
        behind += fwd.weight[i] * gc;
    }
}

nd::Var composite_ray(nd::Var sigma, nd::Var rgb, std::vector<double> delta) {
    const nd::Tensor& sv = sigma.value();
    const nd::Tensor& cv = rgb.value();
    const std::size_t n = sv.numel();
    if (cv.numel() != 3 * n || delta.size() != n) throw std::invalid_argument("composite_ray: shape mismatch");
    std::vector<Vec3> colors(n);
    for (std::size_t i = 0; i < n; ++i) colors[i] = {cv[3 * i], cv[3 * i + 1], cv[3 * i + 2]};
    CompositeResult fwd = composite_ray(sv.values(), colors, delta);
    nd::Tensor out({3}, std::vector<double>{fwd.color.x, fwd.color.y, fwd.color.z});
    return sigma.graph().record(
        std::move(out), {sigma, rgb},
        [fwd = std::move(fwd), colors = std::move(colors), delta = std::move(delta)](
            const nd::Tensor& g, std::span<nd::Tensor* const> grads) {
            const std::size_t n = delta.size();
            std::vector<double> ds(n, 0.0);
            std::vector<Vec3> dc(n);
            composite_ray_backward(delta, colors, fwd, {g[0], g[1], g[2]}, ds, dc);
            if (grads[0])
                for (std::size_t i = 0; i < n; ++i) (*grads[0])[i] += ds[i];
            if (grads[1])
                for (std::size_t i = 0; i < n; ++i) {
                    (*grads[1])[3 * i] += dc[i].x;
                    (*grads[1])[3 * i + 1] += dc[i].y;
                    (*grads[1])[3 * i + 2] += dc[i].z;
                }
        },
        "composite_ray");
}

// ---------------------------------------------------------------------------

Vec3 RayBatch::sample_position(std::size_t r, std::size_t k) const {
    const double t = t_near[r] + (static_cast<double>(k) + 0.5) * spacing[r];
    Vec3 p = rays[r].origin + rays[r].direction * t;
    p.x = std::clamp(p.x, -1.0, 1.0);
    p.y = std::clamp(p.y, -1.0, 1.0);
    p.z = std::clamp(p.z, -1.0, 1.0);
    return p;
}

RayBatch make_ray_batch(std::vector<Ray> rays, std::size_t samples_per_ray, std::vector<double> target) {
    if (samples_per_ray == 0) throw std::invalid_argument("samples_per_ray must be positive");
    if (!target.empty() && target.size() != 3 * rays.size()) throw std::invalid_argument("ray target size mismatch");
    RayBatch b;
    b.samples_per_ray = samples_per_ray;
    b.t_near.resize(rays.size());
    b.spacing.resize(rays.size());
    for (std::size_t r = 0; r < rays.size(); ++r) {
        if (std::abs(norm(rays[r].direction) - 1.0) > 1e-9) throw std::invalid_argument("ray direction not unit length");
        if (auto hit = intersect_unit_box(rays[r])) {
            b.t_near[r] = hit->first;
            b.spacing[r] = (hit->second - hit->first) / static_cast<double>(samples_per_ray);
        }
    }
    b.rays = std::move(rays);
    b.target = std::move(target);
    return b;
}

RayBatch view_rays(const Camera& camera, std::size_t samples_per_ray, const Image* target) {
    std::vector<Ray> rays;
    rays.reserve(camera.width * camera.height);
    for (std::size_t y = 0; y < camera.height; ++y)
        for (std::size_t x = 0; x < camera.width; ++x) rays.push_back(camera.pixel_ray(x, y));
    return make_ray_batch(std::move(rays), samples_per_ray, target ? target->rgb : std::vector<double>{});
}

// ---------------------------------------------------------------------------

FieldTensors FieldTensors::of(const RadianceField& field) {
    FieldTensors t;
    for (std::size_t i = 0; i < 3; ++i) {
        t.planes[i] = &field.planes[i];
        t.lines[i] = &field.lines[i];
    }
    t.shader = field.shader.tensors();
    return t;
}

RenderPass::Lookup RenderPass::lookup(std::size_t ray, std::size_t k) const {
    const Vec3 p = batch_.sample_position(ray, k);
    Lookup lk;
    for (std::size_t i = 0; i < 3; ++i) {
        const PlaneCoords pc = project_to_plane(p, i);
        const nd::Tensor& plane = *field_.planes[i];
        const nd::BilinearCorners c = nd::bilinear_corners(plane.dim(1), plane.dim(2), pc.u, pc.v);
        lk.corner_index[i] = c.index;
        lk.corner_weight[i] = c.weight;
        const std::size_t len = field_.lines[i]->dim(1);
        const double g = pc.w * static_cast<double>(len - 1);
        lk.line_index[i] = std::min(static_cast<std::size_t>(g), len - 2);
        lk.line_frac[i] = g - static_cast<double>(lk.line_index[i]);
    }
    return lk;
}

RenderPass::RenderPass(const FieldConfig& config, const FieldTensors& field, const RayBatch& batch)
    : config_(config), field_(field), batch_(batch) {
    const std::size_t spr = batch.samples_per_ray;
    const std::size_t total = batch.size() * spr;
    const std::size_t channels = config.plane_channels();
    const std::size_t dens = config.density_channels;
    const std::size_t app = config.appearance_channels;
    const std::size_t in_dim = config.shader_inputs();
    for (std::size_t i = 0; i < 3; ++i) {
        if (field.planes[i]->rank() != 3 || field.planes[i]->dim(0) != channels)
            throw std::invalid_argument("render: plane channel count does not match field config");
        if (field.lines[i]->rank() != 2 || field.lines[i]->dim(0) != channels)
            throw std::invalid_argument("render: line channel count does not match field config");
    }

    sigma_.assign(total, 0.0);
    density_feature_.assign(total, 0.0);
    std::vector<double> pv(3 * channels), lv(3 * channels);

    // Density for every sample; full feature gather only where sigma > 0.
    for (std::size_t r = 0; r < batch.size(); ++r) {
        if (!batch.hits(r)) continue;
        for (std::size_t k = 0; k < spr; ++k) {
            const Lookup lk = lookup(r, k);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                const nd::Tensor& plane = *field_.planes[i];
                const nd::Tensor& line = *field_.lines[i];
                const std::size_t area = plane.dim(1) * plane.dim(2), len = line.dim(1);
                for (std::size_t c = 0; c < dens; ++c) {
                    const double* pc = plane.data() + c * area;
                    double p = 0.0;
                    for (int q = 0; q < 4; ++q) p += lk.corner_weight[i][q] * pc[lk.corner_index[i][q]];
                    const double* lc = line.data() + c * len + lk.line_index[i];
                    const double l = (1.0 - lk.line_frac[i]) * lc[0] + lk.line_frac[i] * lc[1];
                    s += p * l;
                }
            }
            const std::size_t id = r * spr + k;
            density_feature_[id] = s;
            sigma_[id] = config.density_scale * density_link(s);
            if (sigma_[id] > 0.0) alive_.push_back(id);
        }
    }

    const std::size_t n = alive_.size();
    plane_values_.assign(n * 3 * channels, 0.0);
    line_values_.assign(n * 3 * channels, 0.0);
    x_.assign(n * in_dim, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t r = alive_[a] / spr, k = alive_[a] % spr;
        const Lookup lk = lookup(r, k);
        double* xrow = x_.data() + a * in_dim;
        for (std::size_t i = 0; i < 3; ++i) {
            const nd::Tensor& plane = *field_.planes[i];
            const nd::Tensor& line = *field_.lines[i];
            const std::size_t area = plane.dim(1) * plane.dim(2), len = line.dim(1);
            for (std::size_t c = 0; c < channels; ++c) {
                const double* pc = plane.data() + c * area;
                double p = 0.0;
                for (int q = 0; q < 4; ++q) p += lk.corner_weight[i][q] * pc[lk.corner_index[i][q]];
                const double* lc = line.data() + c * len + lk.line_index[i];
                const double l = (1.0 - lk.line_frac[i]) * lc[0] + lk.line_frac[i] * lc[1];
                plane_values_[(a * 3 + i) * channels + c] = p;
                line_values_[(a * 3 + i) * channels + c] = l;
                if (c >= dens) xrow[i * app + (c - dens)] = p * l;
            }
        }
        encode_direction(batch.rays[r].direction, config.view_frequencies, xrow + 3 * app);
    }

    // Shader on the shaded samples.
    const std::size_t hid = config.shader_hidden;
    const auto rows = static_cast<Eigen::Index>(n);
    h1_.assign(n * hid, 0.0);
    h2_.assign(n * hid, 0.0);
    rgb_.assign(n * 3, 0.0);
    if (n > 0) {
        ConstMatMap x(x_.data(), rows, static_cast<Eigen::Index>(in_dim));
        MatMap h1(h1_.data(), rows, static_cast<Eigen::Index>(hid));
        MatMap h2(h2_.data(), rows, static_cast<Eigen::Index>(hid));
        MatMap out(rgb_.data(), rows, 3);
        h1.noalias() = x * as_matrix(*field.shader[0]);
        h1.rowwise() += ConstRowVec(field.shader[1]->data(), static_cast<Eigen::Index>(hid));
        h1 = h1.cwiseMax(0.0);
        h2.noalias() = h1 * as_matrix(*field.shader[2]);
        h2.rowwise() += ConstRowVec(field.shader[3]->data(), static_cast<Eigen::Index>(hid));
        h2 = h2.cwiseMax(0.0);
        out.noalias() = h2 * as_matrix(*field.shader[4]);
        out.rowwise() += ConstRowVec(field.shader[5]->data(), 3);
        out = (1.0 + (-out.array()).exp()).inverse().matrix();
    }

    // Composite.
    alpha_.assign(total, 0.0);
    transmittance_.assign(total, 0.0);
    weight_.assign(total, 0.0);
    colors_.assign(batch.size() * 3, 0.0);
    std::size_t a = 0;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        double t = 1.0;
        for (std::size_t k = 0; k < spr; ++k) {
            const std::size_t id = r * spr + k;
            transmittance_[id] = t;
            if (!batch.hits(r) || sigma_[id] <= 0.0) continue;
            const double al = -std::expm1(-sigma_[id] * batch.spacing[r]);
            alpha_[id] = al;
            weight_[id] = t * al;
            for (std::size_t ch = 0; ch < 3; ++ch) colors_[3 * r + ch] += weight_[id] * rgb_[3 * a + ch];
            t *= 1.0 - al;
            ++a;
        }
    }
    for (double v : colors_) {
        if (!std::isfinite(v)) throw nd::NonFiniteError("render produced a non-finite color");
    }
}

void RenderPass::backward(std::span<const double> dcolors, const FieldGrads& grads) const {
    const std::size_t spr = batch_.samples_per_ray;
    const std::size_t channels = config_.plane_channels();
    const std::size_t dens = config_.density_channels;
    const std::size_t app = config_.appearance_channels;
    const std::size_t in_dim = config_.shader_inputs();
    const std::size_t hid = config_.shader_hidden;
    const std::size_t n = alive_.size();
    if (dcolors.size() != colors_.size()) throw std::invalid_argument("render backward: gradient size mismatch");

    // Compositing: d/dsigma and d/drgb for shaded samples (ray-major order matches alive_).
    std::vector<double> dsigma(n, 0.0);
    std::vector<double> drgb(n * 3, 0.0);
    {
        std::size_t end = n;
        for (std::size_t r = batch_.size(); r-- > 0;) {
            std::size_t begin = end;
            while (begin > 0 && alive_[begin - 1] / spr == r) --begin;
            double behind = 0.0;
            const double g0 = dcolors[3 * r], g1 = dcolors[3 * r + 1], g2 = dcolors[3 * r + 2];
            for (std::size_t a = end; a-- > begin;) {
                const std::size_t id = alive_[a];
                const double gc = g0 * rgb_[3 * a] + g1 * rgb_[3 * a + 1] + g2 * rgb_[3 * a + 2];
                const double t_next = transmittance_[id] * (1.0 - alpha_[id]);
                dsigma[a] = batch_.spacing[r] * (t_next * gc - behind);
                drgb[3 * a] = weight_[id] * g0;
                drgb[3 * a + 1] = weight_[id] * g1;
                drgb[3 * a + 2] = weight_[id] * g2;
                behind += weight_[id] * gc;
            }
            end = begin;
        }
    }

    // Shader backward.
    std::vector<double> dx(n * in_dim, 0.0);
    if (n > 0) {
        const auto rows = static_cast<Eigen::Index>(n);
        ConstMatMap x(x_.data(), rows, static_cast<Eigen::Index>(in_dim));
        ConstMatMap h1(h1_.data(), rows, static_cast<Eigen::Index>(hid));
        ConstMatMap h2(h2_.data(), rows, static_cast<Eigen::Index>(hid));
        ConstMatMap out(rgb_.data(), rows, 3);
        RowMatrix dout = ConstMatMap(drgb.data(), rows, 3).array() * out.array() * (1.0 - out.array());
        RowMatrix dh2 = (dout * as_matrix(*field_.shader[4]).transpose()).array() * (h2.array() > 0.0).cast<double>();
        RowMatrix dh1 = (dh2 * as_matrix(*field_.shader[2]).transpose()).array() * (h1.array() > 0.0).cast<double>();
        MatMap(dx.data(), rows, static_cast<Eigen::Index>(in_dim)).noalias() = dh1 * as_matrix(*field_.shader[0]).transpose();
        auto add_weight = [](nd::Tensor* g, const RowMatrix& m) {
            if (g) MatMap(g->data(), m.rows(), m.cols()) += m;
        };
        auto add_bias = [](nd::Tensor* g, const RowMatrix& d) {
            if (g) {
                const Eigen::RowVectorXd s = d.colwise().sum();
                for (Eigen::Index j = 0; j < s.size(); ++j) (*g)[static_cast<std::size_t>(j)] += s[j];
            }
        };
        if (grads.shader[0]) add_weight(grads.shader[0], x.transpose() * dh1);
        add_bias(grads.shader[1], dh1);
        if (grads.shader[2]) add_weight(grads.shader[2], h1.transpose() * dh2);
        add_bias(grads.shader[3], dh2);
        if (grads.shader[4]) add_weight(grads.shader[4], h2.transpose() * dout);
        add_bias(grads.shader[5], dout);
    }

    // Features back to planes and lines.
    bool any_plane = false;
    for (std::size_t i = 0; i < 3; ++i) any_plane = any_plane || grads.planes[i] || grads.lines[i];
    if (!any_plane) return;
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t id = alive_[a];
        const std::size_t r = id / spr, k = id % spr;
        const double ds = dsigma[a] * config_.density_scale * density_link_derivative(density_feature_[id]);
        const Lookup lk = lookup(r, k);
        for (std::size_t i = 0; i < 3; ++i) {
            nd::Tensor* gp = grads.planes[i];
            nd::Tensor* gl = grads.lines[i];
            const std::size_t area = field_.planes[i]->dim(1) * field_.planes[i]->dim(2);
            const std::size_t len = field_.lines[i]->dim(1);
            for (std::size_t c = 0; c < channels; ++c) {
                const double upstream = c < dens ? ds : dx[a * in_dim + i * app + (c - dens)];
                if (upstream == 0.0) continue;
                const double p = plane_values_[(a * 3 + i) * channels + c];
                const double l = line_values_[(a * 3 + i) * channels + c];
                if (gp) {
                    double* g = gp->data() + c * area;
                    const double dp = upstream * l;
                    for (int q = 0; q < 4; ++q) g[lk.corner_index[i][q]] += lk.corner_weight[i][q] * dp;
                }
                if (gl) {
                    double* g = gl->data() + c * len + lk.line_index[i];
                    const double dl = upstream * p;
                    g[0] += (1.0 - lk.line_frac[i]) * dl;
                    g[1] += lk.line_frac[i] * dl;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

FieldTensors tensors_of(const FieldVars& v) {
    FieldTensors t;
    for (std::size_t i = 0; i < 3; ++i) {
        t.planes[i] = &v.planes[i].value();
        t.lines[i] = &v.lines[i].value();
    }
    for (std::size_t i = 0; i < 6; ++i) t.shader[i] = &v.shader[i].value();
    return t;
}

std::vector<nd::Var> inputs_of(const FieldVars& v) {
    std::vector<nd::Var> in(v.planes.begin(), v.planes.end());
    in.insert(in.end(), v.lines.begin(), v.lines.end());
    in.insert(in.end(), v.shader.begin(), v.shader.end());
    return in;
}

FieldGrads sinks_of(std::span<nd::Tensor* const> grads) {
    FieldGrads g;
    for (std::size_t i = 0; i < 3; ++i) {
        g.planes[i] = grads[i];
        g.lines[i] = grads[3 + i];
    }
    for (std::size_t i = 0; i < 6; ++i) g.shader[i] = grads[6 + i];
    return g;
}

}  // namespace

nd::Var render_rays(const FieldConfig& config, const FieldVars& field, const RayBatch& batch) {
    auto pass = std::make_shared<RenderPass>(config, tensors_of(field), batch);
    nd::Tensor out({batch.size(), 3}, pass->colors());
    return field.planes[0].graph().record(
        std::move(out), inputs_of(field),
        [pass](const nd::Tensor& g, std::span<nd::Tensor* const> grads) { pass->backward(g.values(), sinks_of(grads)); },
        "render_rays");
}

nd::Var render_loss(const FieldConfig& config, const FieldVars& field, const RayBatch& batch) {
    if (batch.target.size() != 3 * batch.size()) throw std::invalid_argument("render_loss: batch has no targets");
    auto pass = std::make_shared<RenderPass>(config, tensors_of(field), batch);
    const auto& colors = pass->colors();
    double loss = 0.0;
    for (std::size_t i = 0; i < colors.size(); ++i) {
        const double d = colors[i] - batch.target[i];
        loss += d * d;
    }
    return field.planes[0].graph().record(
        nd::Tensor::scalar(loss), inputs_of(field),
        [pass, &batch](const nd::Tensor& g, std::span<nd::Tensor* const> grads) {
            const auto& colors = pass->colors();
            std::vector<double> dc(colors.size());
            for (std::size_t i = 0; i < colors.size(); ++i) dc[i] = 2.0 * g[0] * (colors[i] - batch.target[i]);
            pass->backward(dc, sinks_of(grads));
        },
        "render_loss");
}

std::vector<double> render_colors(const FieldConfig& config, const FieldTensors& field, const RayBatch& batch) {
    return RenderPass(config, field, batch).colors();
}

Image render_view(const FieldConfig& config, const FieldTensors& field, const Camera& camera) {
    Image img(camera.width, camera.height);
    const std::size_t chunk_rows = 16;
    for (std::size_t y0 = 0; y0 < camera.height; y0 += chunk_rows) {
        const std::size_t y1 = std::min(camera.height, y0 + chunk_rows);
        std::vector<Ray> rays;
        for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = 0; x < camera.width; ++x) rays.push_back(camera.pixel_ray(x, y));
        const RayBatch batch = make_ray_batch(std::move(rays), config.samples_per_ray);
        const auto colors = render_colors(config, field, batch);
        std::copy(colors.begin(), colors.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(y0 * camera.width * 3));
    }
    return img;
}

}  // namespace gridcodec::field
