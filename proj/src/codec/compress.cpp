#include "gridcodec/codec/compress.hpp"

#include <cmath>
#include <stdexcept>

#include "gridcodec/entropy/latent_coding.hpp"
#include "gridcodec/field/importance.hpp"
#include "gridcodec/field/pretrain.hpp"
#include "gridcodec/nd/adam.hpp"
#include "gridcodec/nd/ops.hpp"

namespace gridcodec::codec {

namespace {

double to_float32(double v) { return static_cast<double>(static_cast<float>(v)); }

nd::Tensor float32_rounded(const nd::Tensor& t) {
    nd::Tensor out = t;
    for (double& v : out.storage()) v = to_float32(v);
    return out;
}

constexpr std::size_t kEvalRays = 4096;

}  // namespace

RdLoss rd_loss(const RdVars& vars, const RdInputs& in, Phase phase, double tau, nd::Rng& rng) {
    if (!in.field_config || !in.batch) throw std::invalid_argument("rd_loss: missing field config or batch");
    nd::Graph& g = vars.density.graph();
    const bool recon = in.target_planes[0] != nullptr;
    if (vars.encoder && !recon) throw std::invalid_argument("rd_loss: the encoder needs target planes");

    RdLoss out;
    std::vector<nd::Var> recon_terms, bit_terms;
    for (std::size_t i = 0; i < 3; ++i) {
        const nd::Var z = vars.encoder ? encode_plane(g.constant(*in.target_planes[i]), *vars.encoder) : vars.latents[i];
        const nd::Var zq = quantize(z, phase, rng);
        const std::size_t h = zq.shape()[1], w = zq.shape()[2];
        const nd::Var mask =
            in.use_mask ? sample_mask(vars.mask_logits[i], tau, rng, phase) : g.constant(nd::Tensor({h, w}, 1.0));
        const std::size_t height = in.field_config->plane_size, width = in.field_config->plane_size;
        out.planes[i] = decode_plane(zq, mask, vars.decoder, height, width);
        if (recon) {
            const nd::Tensor no_weight;
            recon_terms.push_back(nd::weighted_sq_error(out.planes[i], *in.target_planes[i],
                                                        in.weights[i] ? *in.weights[i] : no_weight));
        }
        bit_terms.push_back(entropy::masked_bits(zq, mask, vars.density));
    }
    field::FieldVars fv{out.planes, vars.lines, vars.shader};
    out.render = field::render_loss(*in.field_config, fv, *in.batch);
    out.recon = recon ? nd::add_scalars(recon_terms) : g.constant(nd::Tensor::scalar(0.0));
    out.bits = nd::add_scalars(bit_terms);
    const std::array<nd::Var, 3> terms{out.render, out.recon, nd::scale(out.bits, in.lambda)};
    out.total = nd::add_scalars(terms);
    return out;
}

RdVars make_rd_vars(nd::Graph& g, const LatentState& s, const field::RadianceField& field, bool train_field) {
    RdVars v;
    for (std::size_t i = 0; i < 3; ++i) {
        v.latents[i] = g.leaf(s.latents[i], !s.has_encoder());
        v.mask_logits[i] = g.leaf(s.mask_logits[i]);
        v.lines[i] = g.leaf(field.lines[i], train_field);
    }
    v.decoder = {g.leaf(s.decoder.w1), g.leaf(s.decoder.b1), g.leaf(s.decoder.w2), g.leaf(s.decoder.b2)};
    if (s.has_encoder())
        v.encoder = EncoderVars{g.leaf(s.encoder.w1), g.leaf(s.encoder.b1), g.leaf(s.encoder.w2),
                                g.leaf(s.encoder.b2)};
    v.density = g.leaf(s.density.params());
    const auto shader = field.shader.tensors();
    for (std::size_t i = 0; i < 6; ++i) v.shader[i] = g.leaf(*shader[i], train_field);
    return v;
}

std::vector<entropy::PmfTable> CompressedScene::tables() const { return entropy::build_pmf_tables(density, supports); }

field::RadianceField CompressedScene::reconstruct() const {
    field::RadianceField f;
    f.config = field_config;
    for (std::size_t i = 0; i < 3; ++i) {
        f.planes[i] = decode_plane(latents[i], masks[i], decoder, dims.height, dims.width);
        f.lines[i] = lines[i];
    }
    f.shader = shader;
    return f;
}

CompressedScene harden(const LatentState& state, const CodecConfig& config, const field::RadianceField& field) {
    CompressedScene c;
    c.config = config;
    c.field_config = field.config;
    c.dims = state.dims;
    for (std::size_t i = 0; i < 3; ++i) {
        nd::Tensor z;
        if (state.has_encoder()) {
            nd::Graph g;
            const EncoderVars e{g.constant(state.encoder.w1), g.constant(state.encoder.b1),
                                g.constant(state.encoder.w2), g.constant(state.encoder.b2)};
            z = encode_plane(g.constant(field.planes[i]), e).value();
        } else {
            z = state.latents[i];
        }
        const std::size_t area = z.dim(1) * z.dim(2);
        c.masks[i] = config.use_mask ? eval_mask(state.mask_logits[i]) : nd::Tensor({z.dim(1), z.dim(2)}, 1.0);
        for (std::size_t k = 0; k < z.numel(); ++k) {
            const double r = std::round(z[k]);
            z[k] = (c.masks[i][k % area] == 0.0 || r == 0.0) ? 0.0 : r;
        }
        c.latents[i] = std::move(z);
        c.lines[i] = float32_rounded(field.lines[i]);
    }
    c.decoder = {float32_rounded(state.decoder.w1), float32_rounded(state.decoder.b1),
                 float32_rounded(state.decoder.w2), float32_rounded(state.decoder.b2)};
    c.density = entropy::FactorizedDensity(float32_rounded(state.density.params()));
    const nd::Tensor* zs[] = {&c.latents[0], &c.latents[1], &c.latents[2]};
    c.supports = entropy::latent_supports(zs);
    const auto src = field.shader.tensors();
    const auto dst = c.shader.tensors();
    for (std::size_t i = 0; i < 6; ++i) *dst[i] = float32_rounded(*src[i]);
    return c;
}

double evaluate_rd_loss(const LatentState& state, const field::RadianceField& field, const RdInputs& inputs,
                        bool use_mask) {
    nd::Graph g;
    RdVars v = make_rd_vars(g, state, field, false);
    RdInputs in = inputs;
    in.use_mask = use_mask;
    nd::Rng unused(0);
    const RdLoss l = rd_loss(v, in, Phase::eval, 1.0, unused);
    return l.total.value()[0];
}

CompressionResult compress_scene(const field::RadianceField& pretrained, const field::ViewSet& views,
                                 const CodecConfig& config,
                                 const std::function<void(std::size_t, const CompressionReport&)>& progress) {
    config.validate();
    const bool end_to_end = config.mode == TrainingMode::end_to_end;
    if (end_to_end && config.use_encoder) throw std::invalid_argument("the encoder variant needs pretrained planes");
    field::RadianceField field = pretrained;
    const PlaneDims dims{field.config.plane_channels(), field.config.plane_size, field.config.plane_size};

    nd::Rng rng(config.seed);
    nd::Rng init_rng = rng.fork(1), train_rng = rng.fork(2);

    std::array<nd::Tensor, 3> weights;
    RdInputs inputs;
    inputs.field_config = &field.config;
    inputs.lambda = config.lambda;
    inputs.use_mask = config.use_mask;
    if (!end_to_end) {
        for (std::size_t i = 0; i < 3; ++i) inputs.target_planes[i] = &pretrained.planes[i];
        if (config.use_importance) {
            const field::ImportanceMaps maps = field::compute_importance(pretrained, views);
            for (std::size_t i = 0; i < 3; ++i) {
                weights[i] = maps.weights[i];
                inputs.weights[i] = &weights[i];
            }
        }
    }

    CompressionResult result;
    LatentState& state = result.state;
    state = init_latents(dims, config, init_rng);

    std::vector<nd::Tensor*> latent_params, network_params, field_grid_params, field_net_params;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!state.has_encoder()) latent_params.push_back(&state.latents[i]);
        latent_params.push_back(&state.mask_logits[i]);
    }
    for (nd::Tensor* t : state.decoder.tensors()) network_params.push_back(t);
    if (state.has_encoder())
        for (nd::Tensor* t : state.encoder.tensors()) network_params.push_back(t);
    network_params.push_back(&state.density.params());
    if (end_to_end) {
        for (auto& l : field.lines) field_grid_params.push_back(&l);
        for (nd::Tensor* t : field.shader.tensors()) field_net_params.push_back(t);
    }
    auto shapes = [](const std::vector<nd::Tensor*>& ps) {
        std::vector<nd::Shape> s;
        for (auto* p : ps) s.push_back(p->shape());
        return s;
    };
    nd::AdamState latent_opt(shapes(latent_params), {config.latent_lr, config.lr_end_ratio, config.iterations});
    nd::AdamState network_opt(shapes(network_params), {config.network_lr, config.lr_end_ratio, config.iterations});
    nd::AdamState field_grid_opt(shapes(field_grid_params), {config.latent_lr, config.lr_end_ratio, config.iterations});
    nd::AdamState field_net_opt(shapes(field_net_params), {config.network_lr, config.lr_end_ratio, config.iterations});

    const auto train = views.train_indices();
    if (train.empty()) throw std::invalid_argument("compress: no training views");
    const field::RayBatch all = field::gather_rays(views, train, field.config.samples_per_ray);

    CompressionReport& report = result.report;
    std::vector<std::size_t> pick(config.batch_rays);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        for (auto& p : pick) p = train_rng.below(all.size());
        const field::RayBatch batch = field::select_rays(all, pick);
        inputs.batch = &batch;

        nd::Graph g;
        const RdVars vars = make_rd_vars(g, state, field, end_to_end);
        const RdLoss loss =
            rd_loss(vars, inputs, Phase::train, anneal_tau(it, config.iterations, config.tau_start, config.tau_end),
                    train_rng);
        g.backward(loss.total);

        auto grads_of = [&](const std::vector<nd::Var>& vs) {
            std::vector<const nd::Tensor*> out;
            for (const auto& v : vs) out.push_back(&g.grad(v));
            return out;
        };
        std::vector<nd::Var> lv, nv;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!state.has_encoder()) lv.push_back(vars.latents[i]);
            lv.push_back(vars.mask_logits[i]);
        }
        nv = {vars.decoder.w1, vars.decoder.b1, vars.decoder.w2, vars.decoder.b2};
        if (vars.encoder) nv.insert(nv.end(), {vars.encoder->w1, vars.encoder->b1, vars.encoder->w2, vars.encoder->b2});
        nv.push_back(vars.density);
        latent_opt.step(latent_params, grads_of(lv));
        network_opt.step(network_params, grads_of(nv));
        if (end_to_end) {
            field_grid_opt.step(field_grid_params, grads_of({vars.lines.begin(), vars.lines.end()}));
            field_net_opt.step(field_net_params, grads_of({vars.shader.begin(), vars.shader.end()}));
        }

        report.iterations = it + 1;
        report.last_render = loss.render.value()[0];
        report.last_recon = loss.recon.value()[0];
        report.last_bits = loss.bits.value()[0];
        report.last_total = loss.total.value()[0];
        if (progress) progress(it, report);
    }

    // Fixed, evenly strided evaluation rays; the render term is rescaled to one batch.
    std::vector<std::size_t> eval_pick;
    const std::size_t stride = std::max<std::size_t>(1, all.size() / kEvalRays);
    for (std::size_t r = 0; r < all.size() && eval_pick.size() < kEvalRays; r += stride) eval_pick.push_back(r);
    const field::RayBatch eval_batch = field::select_rays(all, eval_pick);
    {
        nd::Graph g;
        RdVars v = make_rd_vars(g, state, field, false);
        inputs.batch = &eval_batch;
        nd::Rng unused(0);
        const RdLoss l = rd_loss(v, inputs, Phase::eval, config.tau_end, unused);
        const double scale = static_cast<double>(config.batch_rays) / static_cast<double>(eval_pick.size());
        report.final_loss =
            scale * l.render.value()[0] + l.recon.value()[0] + config.lambda * l.bits.value()[0];
        report.final_bits = l.bits.value()[0];
        inputs.batch = nullptr;
    }

    result.scene = harden(state, config, field);
    result.reconstruction = result.scene.reconstruct();
    return result;
}

}  // namespace gridcodec::codec
