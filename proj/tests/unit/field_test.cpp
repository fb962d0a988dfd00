#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gridcodec/field/importance.hpp"
#include "gridcodec/field/pretrain.hpp"
#include "gridcodec/field/radiance_field.hpp"
#include "gridcodec/field/render.hpp"
#include "gridcodec/field/scene.hpp"
#include "gridcodec/nd/grad_check.hpp"
#include "gridcodec/nd/ops.hpp"

using namespace gridcodec::field;
namespace nd = gridcodec::nd;

namespace {

FieldConfig tiny_config() {
    FieldConfig c;
    c.plane_size = 8;
    c.line_size = 8;
    c.density_channels = 2;
    c.appearance_channels = 3;
    c.shader_hidden = 8;
    c.samples_per_ray = 16;
    return c;
}

RadianceField tiny_field(std::uint64_t seed, double grid_scale = 1.0) {
    nd::Rng rng(seed);
    RadianceField f = RadianceField::random_init(tiny_config(), rng);
    for (auto& p : f.planes) p *= grid_scale / 0.1;
    for (auto& l : f.lines) l *= 1.0 / 0.1;
    return f;
}

std::vector<Ray> random_rays(std::size_t n, nd::Rng& rng) {
    std::vector<Ray> rays;
    while (rays.size() < n) {
        const Vec3 o{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const Vec3 target{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        if (norm(o - target) < 1.8) continue;
        rays.push_back({o, normalized(target - o)});
    }
    return rays;
}

}  // namespace

TEST(Composite, FullAbsorptionReturnsFirstColor) {
    const std::vector<double> sigma{1e6}, delta{1.0};
    const std::vector<Vec3> rgb{{0.2, 0.4, 0.6}};
    const auto r = composite_ray(sigma, rgb, delta);
    EXPECT_DOUBLE_EQ(r.color[0], 0.2);
    EXPECT_DOUBLE_EQ(r.color[2], 0.6);
    EXPECT_EQ(r.residual_transmittance, 0.0);
}

TEST(Composite, ZeroDensityIsTransparent) {
    const std::vector<double> sigma(5, 0.0), delta(5, 0.1);
    const std::vector<Vec3> rgb(5, Vec3{1, 1, 1});
    const auto r = composite_ray(sigma, rgb, delta);
    EXPECT_EQ(r.color[0], 0.0);
    EXPECT_EQ(r.residual_transmittance, 1.0);
}

TEST(Composite, TwoHalfAlphaSamples) {
    const double s = std::log(2.0);
    const std::vector<double> sigma{s, s}, delta{1.0, 1.0};
    const std::vector<Vec3> rgb{{1, 0, 0}, {0, 1, 0}};
    const auto r = composite_ray(sigma, rgb, delta);
    EXPECT_NEAR(r.color[0], 0.5, 1e-15);
    EXPECT_NEAR(r.color[1], 0.25, 1e-15);
    EXPECT_EQ(r.color[2], 0.0);
    EXPECT_NEAR(r.residual_transmittance, 0.25, 1e-15);
}

TEST(Composite, NegativeInputsThrow) {
    const std::vector<Vec3> rgb(1);
    EXPECT_THROW(composite_ray(std::vector<double>{-1.0}, rgb, std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(composite_ray(std::vector<double>{1.0}, rgb, std::vector<double>{-1.0}), std::invalid_argument);
}

TEST(Composite, TelescopingAndConvexHull) {
    nd::Rng rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng.below(64);
        std::vector<double> sigma(n), delta(n);
        std::vector<Vec3> rgb(n);
        for (std::size_t i = 0; i < n; ++i) {
            sigma[i] = rng.uniform_open() < 0.3 ? 0.0 : std::exp(rng.uniform(-5, 5));
            delta[i] = rng.uniform(0.0, 0.2);
            rgb[i] = {rng.uniform_open(), rng.uniform_open(), rng.uniform_open()};
        }
        const auto r = composite_ray(sigma, rgb, delta);
        double total = r.residual_transmittance;
        for (std::size_t i = 0; i < n; ++i) {
            total += r.weight[i];
            if (i + 1 < n) EXPECT_EQ(r.transmittance[i + 1], r.transmittance[i] * (1.0 - r.alpha[i]));
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (int c = 0; c < 3; ++c) {
            double hi = 0.0;
            for (const auto& v : rgb) hi = std::max(hi, v[c]);
            EXPECT_GE(r.color[c], 0.0);
            EXPECT_LE(r.color[c], hi + 1e-15);
        }
    }
}

TEST(Composite, GraphGradientMatchesFiniteDifferences) {
    nd::Rng rng(4);
    const std::size_t n = 12;
    std::vector<double> delta(n);
    for (auto& d : delta) d = rng.uniform(0.01, 0.3);
    nd::Tensor sigma({n}), rgb({n, 3});
    for (auto& s : sigma.storage()) s = std::exp(rng.uniform(-2, 2));
    for (auto& c : rgb.storage()) c = rng.uniform_open();
    const nd::Tensor dir({3}, {0.3, -1.2, 0.7});
    auto r = nd::grad_check(
        [&](nd::Graph& g, nd::Var s) {
            return nd::sum(nd::mul(composite_ray(s, g.constant(rgb), delta), g.constant(dir)));
        },
        sigma);
    EXPECT_LT(r.max_rel_error, 1e-5);
    r = nd::grad_check(
        [&](nd::Graph& g, nd::Var c) {
            return nd::sum(nd::mul(composite_ray(g.constant(sigma), c, delta), g.constant(dir)));
        },
        rgb);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(QueryField, ZeroPlanesGiveZeroDensity) {
    RadianceField f = tiny_field(1);
    for (auto& p : f.planes) p.fill(0.0);
    nd::Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const Vec3 x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        EXPECT_EQ(query_field(f, x, {0, 0, 1}).sigma, 0.0);
    }
}

TEST(QueryField, DensityIgnoresDirection) {
    const RadianceField f = tiny_field(5);
    nd::Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const Vec3 x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const Vec3 d1 = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
        const Vec3 d2 = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
        EXPECT_EQ(query_field(f, x, d1).sigma, query_field(f, x, d2).sigma);
    }
}

TEST(QueryField, HandSetRankOneAtGridNode) {
    RadianceField f = tiny_field(7);
    for (auto& p : f.planes) p.fill(0.0);
    for (auto& l : f.lines) l.fill(0.0);
    // Grid node 3 on every axis of an 8-node grid sits at -1 + 2 * 3/7.
    const double c = -1.0 + 2.0 * 3.0 / 7.0;
    f.planes[0].at(0, 3, 3) = 0.8;
    f.lines[0][0 * 8 + 3] = 1.5;
    f.planes[1].at(1, 3, 3) = -0.2;
    f.lines[1][1 * 8 + 3] = 2.0;
    const double s = 0.8 * 1.5 - 0.2 * 2.0;
    const double expected = f.config.density_scale * (std::log1p(std::exp(s)) - std::log(2.0));
    EXPECT_NEAR(query_field(f, {c, c, c}, {1, 0, 0}).sigma, expected, 1e-12);
}

TEST(QueryField, OutOfBoxThrows) {
    const RadianceField f = tiny_field(1);
    EXPECT_THROW(query_field(f, {1.01, 0, 0}, {1, 0, 0}), std::out_of_range);
}

TEST(DensityLink, NonnegativeAndZeroAtZero) {
    EXPECT_EQ(density_link(0.0), 0.0);
    for (double s = -5; s <= 5; s += 0.25) EXPECT_GE(density_link(s), 0.0);
}

// Batched renderer against per-sample query_field plus scalar compositing.
TEST(RenderPass, MatchesPointwiseReference) {
    const RadianceField f = tiny_field(8, 0.5);
    nd::Rng rng(9);
    const RayBatch batch = make_ray_batch(random_rays(20, rng), f.config.samples_per_ray);
    const auto colors = render_colors(f.config, FieldTensors::of(f), batch);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        std::vector<double> sigma, delta;
        std::vector<Vec3> rgb;
        for (std::size_t k = 0; batch.hits(r) && k < batch.samples_per_ray; ++k) {
            const auto s = query_field(f, batch.sample_position(r, k), batch.rays[r].direction);
            sigma.push_back(s.sigma);
            rgb.push_back(s.rgb);
            delta.push_back(batch.spacing[r]);
        }
        const auto ref = composite_ray(sigma, rgb, delta);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(colors[3 * r + c], ref.color[c], 1e-12);
    }
}

TEST(RenderLoss, ExactTargetGivesZeroAndKnownResidual) {
    const RadianceField f = tiny_field(10, 0.5);
    nd::Rng rng(11);
    RayBatch batch = make_ray_batch(random_rays(1, rng), f.config.samples_per_ray);
    batch.target = render_colors(f.config, FieldTensors::of(f), batch);
    auto loss_of = [&](const RayBatch& b) {
        nd::Graph g;
        FieldVars v;
        const auto t = FieldTensors::of(f);
        for (int i = 0; i < 3; ++i) {
            v.planes[i] = g.constant(*t.planes[i]);
            v.lines[i] = g.constant(*t.lines[i]);
        }
        for (int i = 0; i < 6; ++i) v.shader[i] = g.constant(*t.shader[i]);
        return render_loss(f.config, v, b).value()[0];
    };
    EXPECT_EQ(loss_of(batch), 0.0);
    batch.target[0] -= 0.1;
    EXPECT_NEAR(loss_of(batch), 0.01, 1e-15);
}

TEST(RenderLoss, GradientsMatchFiniteDifferences) {
    const RadianceField f = tiny_field(12, 0.5);
    nd::Rng rng(13);
    std::vector<double> target(3 * 24);
    for (auto& t : target) t = rng.uniform_open();
    const RayBatch batch = make_ray_batch(random_rays(24, rng), f.config.samples_per_ray, target);
    const auto base = FieldTensors::of(f);

    auto check = [&](int which, std::size_t index) {
        const nd::Tensor& point = which < 3 ? *base.planes[which] : which < 6 ? *base.lines[which - 3]
                                                                               : *base.shader[which - 6];
        return nd::grad_check(
            [&](nd::Graph& g, nd::Var x) {
                FieldVars v;
                for (int i = 0; i < 3; ++i) {
                    v.planes[i] = which == i ? x : g.constant(*base.planes[i]);
                    v.lines[i] = which == 3 + i ? x : g.constant(*base.lines[i]);
                }
                for (int i = 0; i < 6; ++i) v.shader[i] = which == 6 + i ? x : g.constant(*base.shader[i]);
                return render_loss(f.config, v, batch);
            },
            point, 1e-5, 1e-5);
        (void)index;
    };
    for (int which = 0; which < 12; ++which) {
        const auto r = check(which, 0);
        EXPECT_LT(r.max_rel_error, 1e-4) << "parameter group " << which << " index " << r.worst_index << " a=" << r.analytic << " n=" << r.numeric;
    }
}

TEST(Scene, NoSpheresRendersBackground) {
    ToySceneSpec spec;
    spec.camera_count = 4;
    spec.image_size = 16;
    const ViewSet views = generate_scene(spec);
    for (const auto& img : views.images)
        for (double v : img.rgb) EXPECT_EQ(v, 0.0);
}

TEST(Scene, OpaqueCenteredSphereFillsCenterPixel) {
    ToySceneSpec spec;
    spec.spheres.push_back({{0, 0, 0}, 0.5, {0.3, 0.6, 0.9}, 1e4});
    spec.camera_count = 8;
    spec.image_size = 17;
    const ViewSet views = generate_scene(spec);
    for (const auto& img : views.images) {
        EXPECT_NEAR(img.at(8, 8, 0), 0.3, 1e-12);
        EXPECT_NEAR(img.at(8, 8, 1), 0.6, 1e-12);
        EXPECT_NEAR(img.at(8, 8, 2), 0.9, 1e-12);
    }
}

TEST(Scene, SameSeedIsBitIdentical) {
    ToySceneSpec a = make_toy_scene(42), b = make_toy_scene(42);
    a.image_size = b.image_size = 16;
    EXPECT_EQ(generate_scene(a).images, generate_scene(b).images);
}

TEST(Scene, TrainTestSplit) {
    ToySceneSpec spec = make_toy_scene(1);
    spec.image_size = 11;
    const ViewSet v = generate_scene(spec);
    EXPECT_EQ(v.train_indices().size(), 24u);
    EXPECT_EQ(v.test_indices().size(), 8u);
}

TEST(Scene, ParseRoundTripAndRejections) {
    const ToySceneSpec spec = make_toy_scene(3);
    std::istringstream in(format_scene_spec(spec));
    const ToySceneSpec back = parse_scene_spec(in);
    ASSERT_EQ(back.spheres.size(), spec.spheres.size());
    EXPECT_EQ(back.camera_count, spec.camera_count);

    std::istringstream empty("seed = 3\ncamera_count = 8\n");
    EXPECT_THROW(parse_scene_spec(empty), std::invalid_argument);
    std::istringstream outside("sphere = 0.9 0 0 0.3 1 1 1 10\n");
    EXPECT_THROW(parse_scene_spec(outside), std::invalid_argument);
}

TEST(Importance, NodeAlignedSample) {
    ImportanceAccumulator acc(8, 8);
    const double c = -1.0 + 2.0 * 2.0 / 7.0;
    acc.add({c, c, c}, 0.7);
    const auto maps = acc.finish();
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(maps.importance[i][2 * 8 + 2], 0.7);
        EXPECT_DOUBLE_EQ(maps.importance[i].sum(), 0.7);
    }
}

TEST(Importance, CellCenterSample) {
    ImportanceAccumulator acc(8, 8);
    const double c = -1.0 + 2.0 * 2.5 / 7.0;
    acc.add({c, c, c}, 0.7);
    const auto maps = acc.finish();
    for (int i = 0; i < 3; ++i) {
        for (std::size_t y : {2u, 3u})
            for (std::size_t x : {2u, 3u}) EXPECT_NEAR(maps.importance[i][y * 8 + x], 0.175, 1e-15);
    }
}

TEST(Importance, ConservationOnRenderedRays) {
    RadianceField f = tiny_field(14, 0.5);
    ToySceneSpec spec = make_toy_scene(2);
    spec.image_size = 12;
    spec.camera_count = 8;
    const ViewSet views = generate_scene(spec);
    const ImportanceMaps maps = compute_importance(f, views);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(maps.importance[i].sum(), maps.total_contribution, 1e-9);
        for (double w : maps.weights[i].storage()) {
            EXPECT_GE(w, 0.0);
            EXPECT_LE(w, 1.0);
        }
    }
    EXPECT_GT(maps.total_contribution, 0.0);
}

TEST(ImportanceWeights, Examples) {
    const nd::Tensor w = importance_to_weights(nd::Tensor({1, 2}, {0.0, 0.99}));
    EXPECT_DOUBLE_EQ(w[0], 0.0);
    EXPECT_DOUBLE_EQ(w[1], 1.0);
    const nd::Tensor c = importance_to_weights(nd::Tensor({3, 3}, 0.4));
    for (double v : c.storage()) EXPECT_EQ(v, 1.0);
}

TEST(ImportanceWeights, MonotoneInImportance) {
    nd::Rng rng(15);
    nd::Tensor imp({16, 16});
    for (auto& v : imp.storage()) v = rng.uniform_open() < 0.2 ? 0.0 : std::exp(rng.uniform(-8, 3));
    const nd::Tensor w = importance_to_weights(imp);
    for (std::size_t a = 0; a < imp.numel(); ++a)
        for (std::size_t b = 0; b < imp.numel(); ++b)
            if (imp[a] <= imp[b]) EXPECT_LE(w[a], w[b]);
}

TEST(Pretrain, ZeroIterationsLeavesFieldUnchanged) {
    RadianceField f = tiny_field(16);
    const RadianceField before = f;
    ToySceneSpec spec = make_toy_scene(1);
    spec.image_size = 11;
    PretrainOptions opt;
    opt.iterations = 0;
    pretrain_field(f, generate_scene(spec), opt);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(f.planes[i], before.planes[i]);
    EXPECT_EQ(f.shader.w1, before.shader.w1);
}

TEST(Pretrain, SeededRunsAreIdenticalAndReduceLoss) {
    ToySceneSpec spec = make_toy_scene(1);
    spec.image_size = 16;
    const ViewSet views = generate_scene(spec);
    PretrainOptions opt;
    opt.iterations = 60;
    opt.batch_rays = 64;
    RadianceField a = tiny_field(17, 0.1), b = tiny_field(17, 0.1);
    const auto ra = pretrain_field(a, views, opt);
    pretrain_field(b, views, opt);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a.planes[i], b.planes[i]);
    EXPECT_EQ(a.shader.w3, b.shader.w3);
    EXPECT_TRUE(std::isfinite(ra.test_psnr));
}

TEST(RenderLoss, SurvivesGraphGrowthAfterRecording) {
    // Ops record pointers into earlier node values; appending nodes must not move them.
    const RadianceField f = tiny_field(21);
    nd::Rng rng(22);
    std::vector<double> target(3 * 4, 0.3);
    const RayBatch batch = make_ray_batch(random_rays(4, rng), f.config.samples_per_ray, target);
    nd::Tensor grads[2];
    for (int grow = 0; grow < 2; ++grow) {
        nd::Graph g;
        FieldVars v;
        for (std::size_t i = 0; i < 3; ++i) v.planes[i] = g.leaf(f.planes[i]), v.lines[i] = g.leaf(f.lines[i]);
        const auto shader = f.shader.tensors();
        for (std::size_t i = 0; i < 6; ++i) v.shader[i] = g.leaf(*shader[i]);
        nd::Var loss = render_loss(f.config, v, batch);
        for (int k = 0; grow && k < 5000; ++k) g.constant(nd::Tensor({16}, 1.0));
        g.backward(loss);
        grads[grow] = g.grad(v.planes[0]);
    }
    EXPECT_EQ(grads[0], grads[1]);
}
