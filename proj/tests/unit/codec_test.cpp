#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gridcodec/codec/compress.hpp"
#include "gridcodec/codec/config.hpp"
#include "gridcodec/codec/latent_state.hpp"
#include "gridcodec/codec/ops.hpp"
#include "gridcodec/field/scene.hpp"
#include "gridcodec/nd/grad_check.hpp"
#include "gridcodec/nd/ops.hpp"

using namespace gridcodec::codec;
namespace nd = gridcodec::nd;
namespace field = gridcodec::field;

namespace {

field::FieldConfig tiny_field_config() {
    field::FieldConfig c;
    c.plane_size = 8;
    c.line_size = 8;
    c.density_channels = 2;
    c.appearance_channels = 3;
    c.shader_hidden = 8;
    c.samples_per_ray = 16;
    return c;
}

CodecConfig tiny_codec_config() {
    CodecConfig c = preset("desk-small");
    c.latent_channels = 3;
    c.hidden_channels = 4;
    c.iterations = 5;
    c.batch_rays = 16;
    return c;
}

// A small random field, state with nonzero latents and biases, and a ray batch
// whose rays cross the box.
struct RdFixture {
    field::RadianceField field;
    LatentState state;
    field::RayBatch batch;
    std::array<nd::Tensor, 3> weights;

    explicit RdFixture(std::uint64_t seed) {
        nd::Rng rng(seed);
        field = field::RadianceField::random_init(tiny_field_config(), rng);
        for (auto& p : field.planes) p *= 10.0;
        for (auto& l : field.lines) l *= 10.0;
        const PlaneDims dims{field.planes[0].dim(0), field.planes[0].dim(1), field.planes[0].dim(2)};
        state = init_latents(dims, tiny_codec_config(), rng);
        for (auto& z : state.latents)
            for (double& v : z.storage()) v = rng.uniform(-3.0, 3.0);
        for (auto* t : state.decoder.tensors())
            for (double& v : t->storage()) v += rng.uniform(-0.2, 0.2);
        for (double& v : state.density.params().storage()) v += rng.uniform(-0.3, 0.3);
        std::vector<field::Ray> rays;
        std::vector<double> target;
        for (int r = 0; r < 6; ++r) {
            const field::Vec3 o{3.0, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
            rays.push_back({o, field::normalized(field::Vec3{0, 0, 0} - o)});
            for (int c = 0; c < 3; ++c) target.push_back(rng.uniform(0, 1));
        }
        batch = field::make_ray_batch(std::move(rays), field.config.samples_per_ray, std::move(target));
        for (std::size_t i = 0; i < 3; ++i) {
            weights[i] = nd::Tensor({dims.height, dims.width});
            for (double& v : weights[i].storage()) v = rng.uniform(0, 1);
        }
    }

    RdInputs inputs(double lambda) const {
        RdInputs in;
        in.field_config = &field.config;
        for (std::size_t i = 0; i < 3; ++i) {
            in.target_planes[i] = &field.planes[i];
            in.weights[i] = &weights[i];
        }
        in.batch = &batch;
        in.lambda = lambda;
        return in;
    }
};

}  // namespace

TEST(Quantize, EvalRoundsHalfAwayFromZero) {
    nd::Tensor z({5});
    z.storage() = {-1.5, -0.4, 0.5, 2.49, 7.0};
    nd::Rng rng(1);
    const nd::Tensor q = quantize(z, Phase::eval, rng);
    EXPECT_EQ(q.storage(), (std::vector<double>{-2.0, -0.0, 1.0, 2.0, 7.0}));
}

TEST(Quantize, TrainNoiseHasUniformMoments) {
    const std::size_t n = 1000000;
    nd::Tensor z({n}, 3.0);
    nd::Rng rng(2);
    const nd::Tensor q = quantize(z, Phase::train, rng);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = q[i] - 3.0;
        ASSERT_GE(u, -0.5);
        ASSERT_LE(u, 0.5);
        mean += u;
        m2 += u * u;
    }
    mean /= n;
    const double var = m2 / n - mean * mean;
    // U(-1/2, 1/2): variance 1/12, fourth central moment 1/80.
    const double mean_se = std::sqrt(1.0 / 12.0 / n);
    const double var_se = std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / n);
    EXPECT_NEAR(mean, 0.0, 3 * mean_se);
    EXPECT_NEAR(var, 1.0 / 12.0, 3 * var_se);
}

TEST(Quantize, GraphGradientPassesStraightThrough) {
    nd::Graph g;
    nd::Tensor z({4}, 0.3);
    nd::Var v = g.leaf(z);
    nd::Rng rng(3);
    g.backward(nd::sum(quantize(v, Phase::train, rng)));
    for (double d : g.grad(v).storage()) EXPECT_EQ(d, 1.0);
}

TEST(SampleMask, EqualLogitsGiveFairCoin) {
    const std::size_t n = 100000;
    nd::Graph g;
    nd::Var logits = g.leaf(nd::Tensor({2, 1, n}, 0.7));
    nd::Rng rng(4);
    const nd::Tensor m = sample_mask(logits, 1.0, rng, Phase::train).value();
    const double p = m.sum() / n;
    EXPECT_NEAR(p, 0.5, 3 * std::sqrt(0.25 / n));
    for (double v : m.storage()) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(SampleMask, SaturatedLogitsAreDeterministic) {
    nd::Tensor l({2, 4, 4}, 0.0);
    for (std::size_t j = 0; j < 16; ++j) l[16 + j] = 60.0;
    nd::Graph g;
    nd::Rng rng(5);
    const nd::Tensor m = sample_mask(g.leaf(l), 0.1, rng, Phase::train).value();
    EXPECT_EQ(m.sum(), 16.0);
}

TEST(SampleMask, EvalIsArgmaxWithTiesToZero) {
    nd::Tensor l({2, 1, 3});
    l.storage() = {1.0, 0.0, 2.0, 0.5, 0.0, 3.0};
    EXPECT_EQ(eval_mask(l).storage(), (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(SampleMask, StraightThroughGradientSigns) {
    nd::Graph g;
    nd::Var logits = g.leaf(nd::Tensor({2, 1, 1}, 0.0));
    nd::Rng rng(6);
    g.backward(nd::sum(sample_mask(logits, 0.5, rng, Phase::train)));
    const nd::Tensor& d = g.grad(logits);
    // Derivative of the perturbed softmax: p(1 - p) / tau, at most 0.25 / 0.5.
    EXPECT_GT(d[1], 0.0);
    EXPECT_LE(d[1], 0.5);
    EXPECT_EQ(d[0], -d[1]);
}

TEST(AnnealTau, EndpointsAndGeometricMidpoint) {
    EXPECT_EQ(anneal_tau(0, 100), 10.0);
    EXPECT_EQ(anneal_tau(100, 100), 0.1);
    EXPECT_NEAR(anneal_tau(50, 100), 1.0, 1e-12);
    EXPECT_GT(anneal_tau(30, 100), anneal_tau(31, 100));
}

TEST(InitLatents, ShapesFollowPlaneSize) {
    CodecConfig cfg = tiny_codec_config();
    nd::Rng rng(7);
    const LatentState s = init_latents({16, 64, 64}, cfg, rng);
    EXPECT_EQ(s.latents[0].shape(), (nd::Shape{3, 16, 16}));
    EXPECT_EQ(s.mask_logits[2].shape(), (nd::Shape{2, 16, 16}));
    EXPECT_EQ(s.decoder.w1.shape(), (nd::Shape{3, 4, 3, 3}));
    EXPECT_EQ(s.decoder.w2.shape(), (nd::Shape{4, 16, 3, 3}));
    EXPECT_EQ(s.latents[0].sum(), 0.0);
    EXPECT_FALSE(s.has_encoder());
    EXPECT_EQ(eval_mask(s.mask_logits[0]).sum(), 256.0);

    const LatentState odd = init_latents({5, 65, 65}, cfg, rng);
    EXPECT_EQ(odd.latents[1].shape(), (nd::Shape{3, 17, 17}));
    const nd::Tensor p = decode_plane(odd.latents[1], eval_mask(odd.mask_logits[1]), odd.decoder, 65, 65);
    EXPECT_EQ(p.shape(), (nd::Shape{5, 65, 65}));
}

TEST(InitLatents, GaussianInitIsSmall) {
    CodecConfig cfg = tiny_codec_config();
    cfg.init = LatentInit::gaussian;
    nd::Rng rng(8);
    const LatentState s = init_latents({16, 64, 64}, cfg, rng);
    double m2 = 0.0;
    for (double v : s.latents[0].storage()) m2 += v * v;
    EXPECT_NEAR(std::sqrt(m2 / s.latents[0].numel()), cfg.gaussian_init_std, 0.1 * cfg.gaussian_init_std);
}

TEST(InitLatents, EncoderVariantHasMirroredShapes) {
    CodecConfig cfg = tiny_codec_config();
    cfg.use_encoder = true;
    nd::Rng rng(9);
    const LatentState s = init_latents({16, 32, 32}, cfg, rng);
    ASSERT_TRUE(s.has_encoder());
    nd::Graph g;
    const EncoderVars e{g.leaf(s.encoder.w1), g.leaf(s.encoder.b1), g.leaf(s.encoder.w2), g.leaf(s.encoder.b2)};
    EXPECT_EQ(encode_plane(g.constant(nd::Tensor({16, 32, 32}, 0.5)), e).shape(), (nd::Shape{3, 8, 8}));
    EXPECT_EQ(encode_plane(g.constant(nd::Tensor({16, 32, 32}, 0.0)), e).value().sum(), 0.0);
}

TEST(DecodePlane, FullyMaskedGivesZeroWithZeroBiases) {
    nd::Rng rng(10);
    LatentState s = init_latents({5, 16, 16}, tiny_codec_config(), rng);
    for (double& v : s.latents[0].storage()) v = rng.uniform(-5, 5);
    const nd::Tensor p = decode_plane(s.latents[0], nd::Tensor({4, 4}, 0.0), s.decoder, 16, 16);
    for (double v : p.storage()) EXPECT_EQ(v, 0.0);
}

TEST(DecodePlane, ReceptiveFieldIsLocal) {
    nd::Rng rng(11);
    LatentState s = init_latents({5, 32, 32}, tiny_codec_config(), rng);
    const nd::Tensor mask({8, 8}, 1.0);
    const nd::Tensor base = decode_plane(s.latents[0], mask, s.decoder, 32, 32);
    nd::Tensor z = s.latents[0];
    z.at(1, 3, 4) = 4.0;
    const nd::Tensor moved = decode_plane(z, mask, s.decoder, 32, 32);
    std::size_t rmin = 99, rmax = 0, cmin = 99, cmax = 0, changed = 0;
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t y = 0; y < 32; ++y)
            for (std::size_t x = 0; x < 32; ++x) {
                if (moved.at(c, y, x) == base.at(c, y, x)) continue;
                ++changed;
                rmin = std::min(rmin, y), rmax = std::max(rmax, y);
                cmin = std::min(cmin, x), cmax = std::max(cmax, x);
            }
    ASSERT_GT(changed, 0u);
    EXPECT_LE(rmax - rmin + 1, 7u);
    EXPECT_LE(cmax - cmin + 1, 7u);
}

TEST(DecodePlane, GraphAndTensorFormsAgree) {
    RdFixture f(12);
    nd::Graph g;
    const auto& d = f.state.decoder;
    const DecoderVars dv{g.constant(d.w1), g.constant(d.b1), g.constant(d.w2), g.constant(d.b2)};
    const nd::Tensor mask = eval_mask(f.state.mask_logits[0]);
    const nd::Tensor a = decode_plane(g.constant(f.state.latents[0]), g.constant(mask), dv, 8, 8).value();
    EXPECT_EQ(a, decode_plane(f.state.latents[0], mask, d, 8, 8));
}

TEST(RdLoss, AllMasksOffCostsZeroBits) {
    RdFixture f(13);
    for (auto& l : f.state.mask_logits)
        for (std::size_t j = 0; j < l.numel() / 2; ++j) l[j] = 50.0;
    nd::Graph g;
    const RdVars v = make_rd_vars(g, f.state, f.field, false);
    nd::Rng rng(1);
    const RdLoss l = rd_loss(v, f.inputs(0.1), Phase::eval, 1.0, rng);
    EXPECT_EQ(l.bits.value()[0], 0.0);
}

TEST(RdLoss, ZeroLambdaLeavesDensityUntouched) {
    RdFixture f(14);
    nd::Graph g;
    const RdVars v = make_rd_vars(g, f.state, f.field, false);
    nd::Rng rng(1);
    const RdLoss l = rd_loss(v, f.inputs(0.0), Phase::train, 1.0, rng);
    g.backward(l.total);
    for (double d : g.grad(v.density).storage()) EXPECT_EQ(d, 0.0);
}

TEST(RdLoss, RateTermIsLinearInLambda) {
    RdFixture f(15);
    double totals[2], bits[2];
    for (int k = 0; k < 2; ++k) {
        nd::Graph g;
        const RdVars v = make_rd_vars(g, f.state, f.field, false);
        nd::Rng rng(1);
        const RdLoss l = rd_loss(v, f.inputs(k == 0 ? 0.01 : 0.02), Phase::train, 1.0, rng);
        totals[k] = l.total.value()[0] - l.render.value()[0] - l.recon.value()[0];
        bits[k] = l.bits.value()[0];
    }
    EXPECT_EQ(bits[0], bits[1]);
    EXPECT_NEAR(totals[1], 2.0 * totals[0], 1e-12 * std::abs(totals[1]));
}

TEST(RdLoss, UnitWeightsMatchUnweighted) {
    RdFixture f(16);
    double recon[2];
    for (int k = 0; k < 2; ++k) {
        nd::Graph g;
        const RdVars v = make_rd_vars(g, f.state, f.field, false);
        RdInputs in = f.inputs(0.01);
        std::array<nd::Tensor, 3> ones;
        for (std::size_t i = 0; i < 3; ++i) {
            ones[i] = nd::Tensor({8, 8}, 1.0);
            in.weights[i] = k == 0 ? &ones[i] : nullptr;
        }
        nd::Rng rng(1);
        recon[k] = rd_loss(v, in, Phase::eval, 1.0, rng).recon.value()[0];
    }
    EXPECT_EQ(recon[0], recon[1]);
}

TEST(RdLoss, GradientsMatchFiniteDifferences) {
    RdFixture f(17);
    const RdInputs in = f.inputs(0.05);
    // Reseeding per evaluation holds the noise and Gumbel draws fixed.
    auto with = [&](auto replace) {
        return [&, replace](nd::Graph& g, nd::Var x) {
            RdVars v = make_rd_vars(g, f.state, f.field, false);
            replace(v, x);
            nd::Rng rng(99);
            return rd_loss(v, in, Phase::train, 0.5, rng).total;
        };
    };
    const auto latent = nd::grad_check(with([](RdVars& v, nd::Var x) { v.latents[1] = x; }), f.state.latents[1]);
    EXPECT_LT(latent.max_rel_error, 1e-5);
    const auto w1 = nd::grad_check(with([](RdVars& v, nd::Var x) { v.decoder.w1 = x; }), f.state.decoder.w1);
    EXPECT_LT(w1.max_rel_error, 1e-5);
    const auto b2 = nd::grad_check(with([](RdVars& v, nd::Var x) { v.decoder.b2 = x; }), f.state.decoder.b2);
    EXPECT_LT(b2.max_rel_error, 1e-5);
    const auto theta =
        nd::grad_check(with([](RdVars& v, nd::Var x) { v.density = x; }), f.state.density.params());
    EXPECT_LT(theta.max_rel_error, 1e-5);
}

TEST(Harden, ZeroesMaskedLatentsAndRoundsToFloat) {
    RdFixture f(18);
    f.state.mask_logits[0][0] = 10.0;  // location (0,0) of plane 0 off
    const CompressedScene c = harden(f.state, tiny_codec_config(), f.field);
    EXPECT_EQ(c.masks[0][0], 0.0);
    for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(c.latents[0].at(ch, 0, 0), 0.0);
    for (double v : c.latents[1].storage()) EXPECT_EQ(v, std::round(v));
    for (double v : c.decoder.w1.storage()) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
    const field::RadianceField r = c.reconstruct();
    EXPECT_EQ(r.planes[2].shape(), f.field.planes[2].shape());
}

TEST(CompressScene, SeededRunsAreIdentical) {
    field::ToySceneSpec spec = field::make_toy_scene(1);
    spec.image_size = 12;
    const field::ViewSet views = field::generate_scene(spec);
    RdFixture f(19);
    CodecConfig cfg = tiny_codec_config();
    const CompressionResult a = compress_scene(f.field, views, cfg);
    const CompressionResult b = compress_scene(f.field, views, cfg);
    EXPECT_EQ(a.report.iterations, cfg.iterations);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.scene.latents[i], b.scene.latents[i]);
    EXPECT_EQ(a.report.final_loss, b.report.final_loss);
    EXPECT_TRUE(std::isfinite(a.report.final_loss));
}

TEST(CodecConfig, PresetsAndValidation) {
    EXPECT_EQ(preset("high").latent_channels, 192u);
    EXPECT_EQ(preset("low").hidden_channels, 192u);
    EXPECT_THROW(preset("medium"), std::invalid_argument);
    CodecConfig c = preset("desk-large");
    c.lambda = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_EQ(parse_training_mode(to_string(TrainingMode::end_to_end)), TrainingMode::end_to_end);
    EXPECT_THROW(parse_latent_init("ones"), std::invalid_argument);
}

TEST(CodecConfig, TextOverrides) {
    CodecConfig c = preset("desk-small");
    std::istringstream in("# tuning\niterations = 42\nlatent_lr = 0.5  # faster\nuse_mask = false\nmode = end-to-end\n\n");
    apply_config_text(c, in);
    EXPECT_EQ(c.iterations, 42u);
    EXPECT_EQ(c.latent_lr, 0.5);
    EXPECT_FALSE(c.use_mask);
    EXPECT_EQ(c.mode, TrainingMode::end_to_end);
    for (const char* bad : {"colour = 3\n", "iterations = many\n", "iterations = 3 4\n", "iterations\n"}) {
        std::istringstream b(bad);
        EXPECT_THROW(apply_config_text(c, b), std::invalid_argument) << bad;
    }
}
