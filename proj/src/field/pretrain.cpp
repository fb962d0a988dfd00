#include "gridcodec/field/pretrain.hpp"

#include <cmath>
#include <stdexcept>

#include "gridcodec/eval/metrics.hpp"
#include "gridcodec/nd/adam.hpp"
#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/ops.hpp"
#include "gridcodec/nd/rng.hpp"

namespace gridcodec::field {

RayBatch gather_rays(const ViewSet& views, const std::vector<std::size_t>& indices, std::size_t samples_per_ray) {
    std::vector<Ray> rays;
    std::vector<double> target;
    for (std::size_t v : indices) {
        const Camera& cam = views.cameras.at(v);
        for (std::size_t y = 0; y < cam.height; ++y)
            for (std::size_t x = 0; x < cam.width; ++x) rays.push_back(cam.pixel_ray(x, y));
        const auto& rgb = views.images.at(v).rgb;
        target.insert(target.end(), rgb.begin(), rgb.end());
    }
    return make_ray_batch(std::move(rays), samples_per_ray, std::move(target));
}

RayBatch select_rays(const RayBatch& all, const std::vector<std::size_t>& indices) {
    RayBatch b;
    b.samples_per_ray = all.samples_per_ray;
    b.rays.reserve(indices.size());
    for (std::size_t i : indices) {
        b.rays.push_back(all.rays.at(i));
        b.t_near.push_back(all.t_near[i]);
        b.spacing.push_back(all.spacing[i]);
        if (!all.target.empty()) {
            for (std::size_t c = 0; c < 3; ++c) b.target.push_back(all.target[3 * i + c]);
        }
    }
    return b;
}

double mean_view_psnr(const FieldConfig& config, const FieldTensors& field, const ViewSet& views,
                      const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("mean_view_psnr: no views");
    double total = 0.0;
    for (std::size_t v : indices) total += eval::psnr(render_view(config, field, views.cameras[v]), views.images[v]);
    return total / static_cast<double>(indices.size());
}

PretrainReport pretrain_field(RadianceField& field, const ViewSet& views, const PretrainOptions& options,
                              const std::function<void(std::size_t, double)>& progress) {
    PretrainReport report;
    const auto train = views.train_indices();
    if (train.empty()) throw std::invalid_argument("pretrain: no training views");
    const RayBatch all = gather_rays(views, train, field.config.samples_per_ray);

    std::vector<nd::Tensor*> grid_params, net_params;
    for (std::size_t i = 0; i < 3; ++i) {
        grid_params.push_back(&field.planes[i]);
        grid_params.push_back(&field.lines[i]);
    }
    for (nd::Tensor* t : field.shader.tensors()) net_params.push_back(t);
    auto shapes = [](const std::vector<nd::Tensor*>& ps) {
        std::vector<nd::Shape> s;
        for (auto* p : ps) s.push_back(p->shape());
        return s;
    };
    nd::AdamState grid_opt(shapes(grid_params), {options.grid_lr, options.lr_end_ratio, options.iterations});
    nd::AdamState net_opt(shapes(net_params), {options.network_lr, options.lr_end_ratio, options.iterations});

    nd::Rng rng(options.seed);
    std::vector<std::size_t> pick(options.batch_rays);
    for (std::size_t it = 0; it < options.iterations; ++it) {
        for (auto& p : pick) p = rng.below(all.size());
        const RayBatch batch = select_rays(all, pick);

        nd::Graph g;
        FieldVars vars;
        for (std::size_t i = 0; i < 3; ++i) {
            vars.planes[i] = g.leaf(field.planes[i]);
            vars.lines[i] = g.leaf(field.lines[i]);
        }
        const auto shader = field.shader.tensors();
        for (std::size_t i = 0; i < 6; ++i) vars.shader[i] = g.leaf(*shader[i]);
        nd::Var loss = render_loss(field.config, vars, batch);
        if (options.plane_tv_weight > 0.0) {
            std::vector<nd::Var> terms{loss};
            for (const auto& p : vars.planes) terms.push_back(nd::scale(nd::total_variation(p), options.plane_tv_weight));
            loss = nd::add_scalars(terms);
        }
        g.backward(loss);
        report.final_batch_loss = loss.value()[0];
        if (!std::isfinite(report.final_batch_loss))
            throw nd::NonFiniteError("pretrain diverged at iteration " + std::to_string(it));

        std::vector<const nd::Tensor*> grid_grads, net_grads;
        for (std::size_t i = 0; i < 3; ++i) {
            grid_grads.push_back(&g.grad(vars.planes[i]));
            grid_grads.push_back(&g.grad(vars.lines[i]));
        }
        for (std::size_t i = 0; i < 6; ++i) net_grads.push_back(&g.grad(vars.shader[i]));
        grid_opt.step(grid_params, grid_grads);
        net_opt.step(net_params, net_grads);
        ++report.iterations;
        if (progress) progress(it, report.final_batch_loss);
    }

    const FieldTensors tensors = FieldTensors::of(field);
    report.train_psnr = mean_view_psnr(field.config, tensors, views, train);
    const auto test = views.test_indices();
    report.test_psnr = test.empty() ? report.train_psnr : mean_view_psnr(field.config, tensors, views, test);
    return report;
}

}  // namespace gridcodec::field
