#include <gtest/gtest.h>

#include <cmath>

#include "gridcodec/nd/adam.hpp"
#include "gridcodec/nd/grad_check.hpp"
#include "gridcodec/nd/graph.hpp"
#include "gridcodec/nd/ops.hpp"
#include "gridcodec/nd/rng.hpp"

namespace nd = gridcodec::nd;

namespace {

nd::Tensor random_tensor(nd::Shape shape, nd::Rng& rng, double scale = 1.0) {
    nd::Tensor t(std::move(shape));
    for (double& v : t.storage()) v = scale * rng.normal();
    return t;
}

// Projects a vector-valued op onto a fixed random direction so the check is scalar.
nd::Var project(nd::Graph& g, nd::Var y, std::uint64_t seed) {
    nd::Rng rng(seed);
    const nd::Var dir = g.constant(random_tensor(y.shape(), rng));
    return nd::sum(nd::mul(y, dir));
}

}  // namespace

TEST(Tensor, RejectsSizeMismatch) {
    EXPECT_THROW(nd::Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
    EXPECT_EQ(nd::Tensor({2, 3}).numel(), 6u);
}

TEST(Graph, NonFiniteForwardIsAnError) {
    nd::Graph g;
    EXPECT_THROW(g.leaf(nd::Tensor({1}, std::vector<double>{NAN})), nd::NonFiniteError);
}

TEST(Backward, SumGivesOnes) {
    nd::Graph g;
    const nd::Var x = g.leaf(nd::Tensor({3}, {1.0, -2.0, 5.0}));
    g.backward(nd::sum(x));
    for (double v : g.grad(x).storage()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, SumOfSquaresGivesTwiceInput) {
    nd::Graph g;
    const nd::Tensor xv({4}, {1.0, -2.0, 0.5, 3.0});
    const nd::Var x = g.leaf(xv);
    g.backward(nd::sum(nd::mul(x, x)));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.grad(x)[i], 2.0 * xv[i]);
}

TEST(Backward, UnusedParameterGetsZeros) {
    nd::Graph g;
    const nd::Var x = g.leaf(nd::Tensor({2}, 1.0));
    const nd::Var unused = g.leaf(nd::Tensor({3}, 1.0));
    g.backward(nd::sum(x));
    EXPECT_EQ(g.grad(unused), nd::Tensor({3}, 0.0));
}

TEST(Backward, RequiresScalarLoss) {
    nd::Graph g;
    const nd::Var x = g.leaf(nd::Tensor({2}, 1.0));
    EXPECT_THROW(g.backward(x), std::invalid_argument);
}

TEST(Backward, IsDeterministic) {
    auto run = [] {
        nd::Rng rng(7);
        nd::Graph g;
        const nd::Var in = g.leaf(random_tensor({3, 4, 5}, rng));
        const nd::Var w = g.leaf(random_tensor({3, 2, 3, 3}, rng));
        const nd::Var b = g.leaf(random_tensor({2}, rng));
        const nd::Var y = nd::selu(nd::conv_transpose2d(in, w, b));
        g.backward(nd::sum(nd::mul(y, y)));
        return std::make_tuple(g.grad(in), g.grad(w), g.grad(b));
    };
    EXPECT_EQ(run(), run());
}

TEST(ConvTranspose, ShapeDoubles) {
    nd::Rng rng(1);
    const nd::Tensor y = nd::conv_transpose2d_forward(random_tensor({4, 8, 8}, rng), random_tensor({4, 6, 3, 3}, rng),
                                                      random_tensor({6}, rng));
    EXPECT_EQ(y.shape(), (nd::Shape{6, 16, 16}));
    for (std::size_t h = 1; h <= 5; ++h)
        for (std::size_t w = 1; w <= 5; ++w) {
            const nd::Tensor o = nd::conv_transpose2d_forward(nd::Tensor({2, h, w}, 1.0), nd::Tensor({2, 3, 3, 3}, 1.0),
                                                              nd::Tensor({3}));
            EXPECT_EQ(o.shape(), (nd::Shape{3, 2 * h, 2 * w}));
        }
}

TEST(ConvTranspose, ZeroWeightsGiveZeros) {
    nd::Rng rng(2);
    const nd::Tensor y =
        nd::conv_transpose2d_forward(random_tensor({3, 5, 4}, rng), nd::Tensor({3, 2, 3, 3}), nd::Tensor({2}));
    EXPECT_EQ(y.max_abs(), 0.0);
}

TEST(ConvTranspose, ChannelMismatchThrows) {
    EXPECT_THROW(nd::conv_transpose2d_forward(nd::Tensor({3, 2, 2}), nd::Tensor({4, 2, 3, 3}), nd::Tensor({2})),
                 std::invalid_argument);
}

// Direct scatter definition: out[co, 2y-1+ky, 2x-1+kx] += in[ci,y,x] * w[ci,co,ky,kx].
TEST(ConvTranspose, MatchesDirectScatter) {
    nd::Rng rng(3);
    const nd::Tensor in = random_tensor({2, 3, 4}, rng), w = random_tensor({2, 3, 3, 3}, rng),
                     b = random_tensor({3}, rng);
    nd::Tensor ref({3, 6, 8});
    for (std::size_t co = 0; co < 3; ++co)
        for (std::size_t j = 0; j < 48; ++j) ref[co * 48 + j] = b[co];
    for (std::size_t ci = 0; ci < 2; ++ci)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x)
                for (std::size_t co = 0; co < 3; ++co)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int oy = 2 * y - 1 + ky, ox = 2 * x - 1 + kx;
                            if (oy < 0 || oy >= 6 || ox < 0 || ox >= 8) continue;
                            ref.at(co, oy, ox) += in.at(ci, y, x) * w[((ci * 3 + co) * 3 + ky) * 3 + kx];
                        }
    const nd::Tensor got = nd::conv_transpose2d_forward(in, w, b);
    for (std::size_t i = 0; i < ref.numel(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
}

TEST(ConvTranspose, GradientsMatchFiniteDifferences) {
    nd::Rng rng(4);
    const nd::Tensor w = random_tensor({2, 3, 3, 3}, rng), b = random_tensor({3}, rng);
    const nd::Tensor in = random_tensor({2, 5, 5}, rng);
    auto r = nd::grad_check(
        [&](nd::Graph& g, nd::Var x) { return project(g, nd::conv_transpose2d(x, g.constant(w), g.constant(b)), 9); },
        in);
    EXPECT_LT(r.max_rel_error, 1e-5);
    r = nd::grad_check(
        [&](nd::Graph& g, nd::Var wv) {
            return project(g, nd::conv_transpose2d(g.constant(in), wv, g.constant(b)), 9);
        },
        w);
    EXPECT_LT(r.max_rel_error, 1e-5);
    r = nd::grad_check(
        [&](nd::Graph& g, nd::Var bv) {
            return project(g, nd::conv_transpose2d(g.constant(in), g.constant(w), bv), 9);
        },
        b);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Conv2dStride2, ShapeAndGradient) {
    nd::Rng rng(5);
    const nd::Tensor w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    const nd::Tensor in = random_tensor({2, 7, 6}, rng);
    nd::Graph g0;
    EXPECT_EQ(nd::conv2d_stride2(g0.constant(in), g0.constant(w), g0.constant(b)).shape(), (nd::Shape{3, 4, 3}));
    auto r = nd::grad_check(
        [&](nd::Graph& g, nd::Var x) { return project(g, nd::conv2d_stride2(x, g.constant(w), g.constant(b)), 3); },
        in);
    EXPECT_LT(r.max_rel_error, 1e-5);
    r = nd::grad_check(
        [&](nd::Graph& g, nd::Var wv) { return project(g, nd::conv2d_stride2(g.constant(in), wv, g.constant(b)), 3); },
        w);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Selu, Values) {
    EXPECT_EQ(nd::selu_value(0.0), 0.0);
    EXPECT_EQ(nd::selu_value(1.0), nd::kSeluScale);
    EXPECT_NEAR(nd::kSeluScale, 1.05070098, 1e-8);
    EXPECT_NEAR(nd::kSeluAlpha, 1.67326324, 1e-8);
    EXPECT_NEAR(nd::selu_value(-1.0), nd::kSeluScale * nd::kSeluAlpha * (std::exp(-1.0) - 1.0), 1e-15);
}

TEST(Selu, GradientMatchesFiniteDifferences) {
    nd::Rng rng(6);
    const auto r = nd::grad_check([](nd::Graph& g, nd::Var x) { return project(g, nd::selu(x), 11); },
                                  random_tensor({50}, rng));
    EXPECT_LT(r.max_rel_error, 1e-6);
    const double fd = (nd::selu_value(-0.3 + 1e-6) - nd::selu_value(-0.3 - 1e-6)) / 2e-6;
    EXPECT_NEAR(nd::selu_derivative(-0.3), fd, 1e-8);
}

TEST(Softplus, GradientMatchesFiniteDifferences) {
    nd::Rng rng(8);
    const auto r = nd::grad_check([](nd::Graph& g, nd::Var x) { return project(g, nd::softplus(x), 2); },
                                  random_tensor({30}, rng, 3.0));
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Bilinear, NodeIdentityAndCellCenter) {
    const auto at_node = nd::bilinear_corners(5, 9, 3.0 / 8.0, 2.0 / 4.0);
    double on_node = 0.0;
    for (int q = 0; q < 4; ++q)
        if (at_node.index[q] == 2 * 9 + 3) on_node += at_node.weight[q];
    EXPECT_EQ(on_node, 1.0);

    const auto center = nd::bilinear_corners(5, 9, 3.5 / 8.0, 2.5 / 4.0);
    for (int q = 0; q < 4; ++q) EXPECT_DOUBLE_EQ(center.weight[q], 0.25);

    nd::Rng rng(9);
    nd::Graph g;
    const nd::Tensor plane = random_tensor({3, 5, 9}, rng);
    const nd::Tensor s = nd::bilinear_sample(g.constant(plane), 3.0 / 8.0, 0.5).value();
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s[c], plane.at(c, 2, 3));
}

TEST(Bilinear, OutOfRangeThrows) {
    EXPECT_THROW(nd::bilinear_corners(4, 4, -0.01, 0.5), std::out_of_range);
    EXPECT_THROW(nd::bilinear_corners(4, 4, 0.5, 1.01), std::out_of_range);
}

TEST(Bilinear, WeightsNonnegativeAndSumToOne) {
    nd::Rng rng(10);
    for (int i = 0; i < 10000; ++i) {
        const auto c = nd::bilinear_corners(2 + rng.below(70), 2 + rng.below(70), rng.uniform_open(),
                                            rng.uniform_open());
        double s = 0.0;
        for (double w : c.weight) {
            EXPECT_GE(w, 0.0);
            s += w;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Bilinear, GradientMatchesFiniteDifferences) {
    nd::Rng rng(11);
    const double u = rng.uniform_open(), v = rng.uniform_open();
    const auto r = nd::grad_check([&](nd::Graph& g, nd::Var p) { return project(g, nd::bilinear_sample(p, u, v), 5); },
                                  random_tensor({4, 6, 7}, rng));
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(CenterCrop, OffsetIsFloorOfHalf) {
    nd::Graph g;
    nd::Tensor x({1, 5, 5});
    for (std::size_t i = 0; i < 25; ++i) x[i] = static_cast<double>(i);
    const nd::Tensor y = nd::center_crop(g.constant(x), 2, 3).value();
    EXPECT_EQ(y.shape(), (nd::Shape{1, 2, 3}));
    EXPECT_EQ(y[0], x.at(0, 1, 1));
    EXPECT_EQ(y[5], x.at(0, 2, 3));
}

TEST(WeightedSqError, MatchesHandValue) {
    nd::Graph g;
    const nd::Var p = g.leaf(nd::Tensor({2, 1, 2}, {1.0, 2.0, 3.0, 4.0}));
    const nd::Tensor t({2, 1, 2}, {0.0, 0.0, 0.0, 0.0});
    const nd::Tensor w({1, 2}, {1.0, 0.5});
    const nd::Var e = nd::weighted_sq_error(p, t, w);
    EXPECT_DOUBLE_EQ(e.value()[0], 1.0 + 1.0 + 9.0 + 4.0);
    g.backward(e);
    EXPECT_DOUBLE_EQ(g.grad(p)[1], 2.0 * 2.0 * 0.25);
}

TEST(GradCheck, LinearFunctionIsExact) {
    nd::Rng rng(12);
    const nd::Tensor a = random_tensor({20}, rng);
    const auto r = nd::grad_check(
        [&](const nd::Tensor& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < 20; ++i) s += a[i] * x[i];
            return s;
        },
        [&](const nd::Tensor&) { return a; }, random_tensor({20}, rng));
    EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, KinkIsReportedNotAsserted) {
    const auto r = nd::grad_check([](const nd::Tensor& x) { return std::abs(x[0]); },
                                  [](const nd::Tensor& x) { return nd::Tensor({1}, x[0] >= 0 ? 1.0 : -1.0); },
                                  nd::Tensor({1}, 0.0));
    EXPECT_GT(r.max_rel_error, 0.5);
}

TEST(GradCheck, OracleToleranceSkipsKinksButNotWrongGradients) {
    // A kink inside the stencil is unresolved rather than scored.
    const auto kink = nd::grad_check([](const nd::Tensor& x) { return std::abs(x[0]); },
                                     [](const nd::Tensor& x) { return nd::Tensor({1}, x[0] >= 0 ? 1.0 : -1.0); },
                                     nd::Tensor({1}, 2e-6), 1e-5, 1e-6, 1e-5);
    EXPECT_EQ(kink.unresolved, 1u);
    EXPECT_EQ(kink.checked, 0u);

    // A smooth function with a gradient off by 1e-4 relative is still caught.
    const auto wrong = nd::grad_check([](const nd::Tensor& x) { return std::sin(x[0]) + 100.0; },
                                      [](const nd::Tensor& x) { return nd::Tensor({1}, std::cos(x[0]) * (1 + 1e-4)); },
                                      nd::Tensor({1}, 0.3), 1e-5, 1e-6, 1e-5);
    EXPECT_EQ(wrong.checked, 1u);
    EXPECT_GT(wrong.max_rel_error, 5e-5);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
    nd::Tensor p({3}, {1.0, 2.0, 3.0});
    const nd::Tensor before = p, zero({3});
    nd::AdamState opt({p.shape()}, {0.1, 0.1, 10});
    opt.step({&p}, {&zero});
    EXPECT_EQ(p, before);
    EXPECT_EQ(opt.first_moment(0).shape(), p.shape());
}

// Scalar simulation of the bias-corrected update under a constant gradient.
TEST(Adam, ConstantGradientStepApproachesLearningRate) {
    const double lr = 0.01, g = 0.37;
    nd::Tensor p({1}, 0.0);
    const nd::Tensor grad({1}, g);
    nd::AdamState opt({p.shape()}, {lr, 1.0, 1000});
    double m = 0.0, v = 0.0, sim = 0.0;
    for (int t = 1; t <= 500; ++t) {
        const double prev = p[0];
        opt.step({&p}, {&grad});
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double step = lr * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        sim -= step;
        EXPECT_NEAR(p[0], sim, 1e-12);
        if (t == 500) EXPECT_NEAR(std::abs(p[0] - prev), lr, 1e-6);
    }
}

TEST(Adam, DecayReachesEndRatioAtFinalStep) {
    const nd::ExponentialDecay d{0.02, 0.1, 300};
    EXPECT_EQ(d.at(0), 0.02);
    EXPECT_NEAR(d.at(299), 0.002, 1e-17);
}

TEST(Adam, NonFiniteGradientAbortsStep) {
    nd::Tensor p({2}, 1.0);
    const nd::Tensor bad({2}, {0.0, INFINITY});
    nd::AdamState opt({p.shape()}, {0.1, 0.1, 10});
    EXPECT_THROW(opt.step({&p}, {&bad}), nd::NonFiniteError);
    EXPECT_EQ(p, nd::Tensor({2}, 1.0));
    EXPECT_EQ(opt.step_count(), 0u);
}

TEST(TotalVariation, HandValueAndGradient) {
    nd::Tensor x({1, 2, 2});
    x.storage() = {0.0, 1.0, 3.0, 2.0};
    nd::Graph g;
    // rows: (3-0)^2 + (2-1)^2, cols: (1-0)^2 + (2-3)^2
    EXPECT_DOUBLE_EQ(nd::total_variation(g.leaf(x)).value()[0], 12.0);
    nd::Rng rng(31);
    nd::Tensor p({3, 5, 4});
    for (double& v : p.storage()) v = rng.uniform(-1, 1);
    const auto r = nd::grad_check([](nd::Graph&, nd::Var v) { return nd::total_variation(v); }, p);
    EXPECT_LT(r.max_rel_error, 1e-7);
}
