#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "deer/nn/adam.hpp"
#include "deer/nn/attention.hpp"
#include "deer/nn/checkpoint.hpp"
#include "deer/nn/dense.hpp"
#include "deer/nn/gru.hpp"
#include "deer/nn/mlp.hpp"
#include "gradient_suite.hpp"

using namespace deer;
using nn::Matrix;
using nn::Vector;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar re-evaluation of the GRU gate formulas, one unit at a time.
Vector gru_reference(const nn::GruCell& c, const Vector& x, const Vector& h) {
    const auto k = c.hidden_dim();
    Vector out(k);
    for (nn::Index j = 0; j < k; ++j) {
        double r = c.bias(j), u = c.bias(k + j), xn = c.bias(2 * k + j), hn = 0.0;
        for (nn::Index i = 0; i < x.size(); ++i) {
            r += c.input_weight(j, i) * x(i);
            u += c.input_weight(k + j, i) * x(i);
            xn += c.input_weight(2 * k + j, i) * x(i);
        }
        for (nn::Index i = 0; i < k; ++i) {
            r += c.hidden_weight(j, i) * h(i);
            u += c.hidden_weight(k + j, i) * h(i);
            hn += c.hidden_weight(2 * k + j, i) * h(i);
        }
        r = sigmoid(r);
        u = sigmoid(u);
        const double n = std::tanh(xn + r * hn);
        out(j) = (1.0 - u) * n + u * h(j);
    }
    return out;
}

}  // namespace

TEST(Dense, ZeroWeightsGiveZero) {
    const auto layer = nn::DenseLayer::zeros(2, 2, nn::Activation::identity);
    EXPECT_EQ(nn::dense_forward(layer, Vector{{1.0, 2.0}}), Vector::Zero(2));
}

TEST(Dense, IdentityWeights) {
    auto layer = nn::DenseLayer::zeros(2, 2, nn::Activation::identity);
    layer.weight = Matrix::Identity(2, 2);
    EXPECT_EQ(nn::dense_forward(layer, Vector{{3.0, -1.0}}), (Vector{{3.0, -1.0}}));
}

TEST(Dense, TanhHandArithmetic) {
    auto layer = nn::DenseLayer::zeros(2, 1, nn::Activation::tanh);
    layer.weight << 1.0, 1.0;
    layer.bias << 0.5;
    EXPECT_DOUBLE_EQ(nn::dense_forward(layer, Vector{{0.25, 0.25}})(0), std::tanh(1.0));
}

TEST(Dense, DimensionMismatchThrows) {
    const auto layer = nn::DenseLayer::zeros(3, 2, nn::Activation::relu);
    EXPECT_THROW(nn::dense_forward(layer, Vector::Zero(2)), nn::ShapeError);
}

TEST(Dense, LinearLossGradient) {
    auto layer = nn::DenseLayer::zeros(1, 1, nn::Activation::identity);
    layer.weight << 0.7;
    auto grad = layer.zeros_like();
    const Matrix x = Matrix::Constant(1, 1, 2.0);
    layer.backward(x, layer.forward_batch(x), Matrix::Ones(1, 1), grad);
    EXPECT_DOUBLE_EQ(grad.weight(0, 0), 2.0);
}

TEST(Dense, ConstantLossGivesZeroGradient) {
    nn::Rng rng(3);
    const auto layer = nn::DenseLayer::random(3, 2, nn::Activation::tanh, rng);
    auto grad = layer.zeros_like();
    const Matrix x = Matrix::Random(3, 4);
    layer.backward(x, layer.forward_batch(x), Matrix::Zero(2, 4), grad);
    EXPECT_EQ(grad.weight, Matrix::Zero(2, 3));
    EXPECT_EQ(grad.bias, Vector::Zero(2));
}

TEST(Dense, ForwardIsPure) {
    nn::Rng rng(5);
    const auto layer = nn::DenseLayer::random(4, 3, nn::Activation::relu, rng);
    const Vector x = Vector::Random(4);
    EXPECT_EQ(layer.forward(x), layer.forward(x));
}

TEST(Gru, ZeroParametersHalveTheHiddenState) {
    const auto cell = nn::GruCell::zeros(2, 3);
    const Vector h{{0.4, -1.0, 2.0}};
    EXPECT_EQ(nn::gru_step(cell, Vector{{5.0, -3.0}}, h), 0.5 * h);
}

TEST(Gru, ZeroIsAFixedPoint) {
    const auto cell = nn::GruCell::zeros(2, 3);
    EXPECT_EQ(nn::gru_step(cell, Vector{{1.0, 2.0}}, Vector::Zero(3)), Vector::Zero(3));
}

TEST(Gru, MatchesScalarFormulas) {
    nn::Rng rng(7);
    const auto cell = nn::GruCell::random(3, 5, rng);
    const Vector x = Vector::Random(3);
    const Vector h = Vector::Random(5) * 0.8;
    const Vector got = nn::gru_step(cell, x, h);
    const Vector want = gru_reference(cell, x, h);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gru, OutputBounds) {
    nn::Rng rng(11);
    const auto cell = nn::GruCell::random(2, 6, rng);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x(2), h(6);
        for (auto& v : x) v = u(rng);
        for (auto& v : h) v = u(rng) / 3.0;
        const Vector out = nn::gru_step(cell, x, h);
        for (nn::Index j = 0; j < 6; ++j) {
            EXPECT_LT(std::abs(out(j)), 1.0);
            EXPECT_LE(std::abs(out(j)), std::max(std::abs(h(j)), 1.0));
        }
    }
}

TEST(Gru, DimensionMismatchThrows) {
    const auto cell = nn::GruCell::zeros(2, 3);
    EXPECT_THROW(nn::gru_step(cell, Vector::Zero(3), Vector::Zero(3)), nn::ShapeError);
    EXPECT_THROW(nn::gru_step(cell, Vector::Zero(2), Vector::Zero(2)), nn::ShapeError);
}

TEST(Attention, SingletonReturnsTheState) {
    const std::vector<Vector> states{Vector{{0.3, -2.0}}};
    const auto r = nn::attention(states, Vector{{1.0, 1.0}});
    EXPECT_EQ(r.context, states[0]);
    EXPECT_DOUBLE_EQ(r.weights(0), 1.0);
}

TEST(Attention, IdenticalStatesShareWeight) {
    const std::vector<Vector> states{Vector{{1.0, 2.0}}, Vector{{1.0, 2.0}}};
    const auto r = nn::attention(states, Vector{{0.5, -1.0}});
    EXPECT_DOUBLE_EQ(r.weights(0), 0.5);
    EXPECT_DOUBLE_EQ(r.weights(1), 0.5);
}

TEST(Attention, ScaledDotProductSoftmax) {
    const std::vector<Vector> states{Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}};
    const auto r = nn::attention(states, Vector{{1.0, 0.0}});
    const double s = 1.0 / std::sqrt(2.0);
    const double w0 = std::exp(s) / (std::exp(s) + 1.0);
    EXPECT_NEAR(r.weights(0), w0, 1e-15);
    EXPECT_NEAR(r.weights(1), 1.0 - w0, 1e-15);
}

TEST(Attention, EmptyListThrows) {
    EXPECT_THROW(nn::attention({}, Vector::Zero(2)), std::invalid_argument);
}

TEST(Attention, WeightsFormADistribution) {
    nn::Rng rng(13);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vector> states(1 + trial % 7, Vector(4));
        for (auto& s : states)
            for (auto& v : s) v = n(rng);
        Vector q(4);
        for (auto& v : q) v = n(rng);
        const auto r = nn::attention(states, q);
        EXPECT_NEAR(r.weights.sum(), 1.0, 1e-9);
        EXPECT_GE(r.weights.minCoeff(), 0.0);
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    Vector p{{1.0, -2.0}}, g = Vector::Zero(2);
    nn::AdamState st;
    nn::adam_update({nn::make_span("p", p)}, {nn::make_span("p", g)}, st);
    EXPECT_EQ(p, (Vector{{1.0, -2.0}}));
    EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroLearningRateLeavesParametersUnchanged) {
    Vector p{{1.0, -2.0}}, g{{0.3, 4.0}};
    nn::AdamState st;
    st.learning_rate = 0.0;
    nn::adam_update({nn::make_span("p", p)}, {nn::make_span("p", g)}, st);
    EXPECT_EQ(p, (Vector{{1.0, -2.0}}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Vector p{{0.0}}, g{{1.0}};
    nn::AdamState st;
    st.learning_rate = 0.1;
    nn::adam_update({nn::make_span("p", p)}, {nn::make_span("p", g)}, st);
    EXPECT_NEAR(p(0), -0.1, 1e-8);
}

TEST(Adam, ShapeMismatchThrows) {
    Vector p = Vector::Zero(2), g = Vector::Zero(3);
    nn::AdamState st;
    EXPECT_THROW(nn::adam_update({nn::make_span("p", p)}, {nn::make_span("p", g)}, st), nn::ShapeError);
}

TEST(Mlp, PolyakWithUnitTauCopies) {
    nn::Rng rng(17);
    const auto a = nn::Mlp::random(3, {4}, 2, nn::Activation::relu, rng);
    auto b = nn::Mlp::random(3, {4}, 2, nn::Activation::relu, rng);
    nn::Mlp::polyak(a, b, 1.0);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        EXPECT_EQ(a.layers[i].weight, b.layers[i].weight);
        EXPECT_EQ(a.layers[i].bias, b.layers[i].bias);
    }
}

TEST(Checkpoint, BinaryRoundTripIsBitExact) {
    nn::Rng rng(19);
    auto mlp = nn::Mlp::random(5, {7}, 3, nn::Activation::tanh, rng);
    nn::ParamList params;
    mlp.collect("net", params);
    nn::Checkpoint ckpt;
    ckpt.meta = {{"K1", 7}, {"note", "x"}};
    ckpt.add(params);

    const auto path = std::filesystem::temp_directory_path() / "deer_ckpt_roundtrip.bin";
    ckpt.save(path);
    const auto loaded = nn::Checkpoint::load(path);
    EXPECT_EQ(loaded.to_bytes(), ckpt.to_bytes());
    EXPECT_EQ(loaded.meta, ckpt.meta);

    auto copy = nn::Mlp::random(5, {7}, 3, nn::Activation::tanh, rng);
    nn::ParamList dst;
    copy.collect("net", dst);
    loaded.restore(dst);
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) EXPECT_EQ(copy.layers[i].weight, mlp.layers[i].weight);
    std::filesystem::remove(path);
}

TEST(Checkpoint, JsonRoundTrip) {
    nn::Checkpoint ckpt;
    Vector v{{0.1, 1e-300, -3.25}};
    ckpt.add({nn::make_span("v", v)});
    const auto back = nn::Checkpoint::from_json(ckpt.to_json());
    EXPECT_EQ(back.tensor("v"), ckpt.tensor("v"));
}

TEST(Checkpoint, RestoreRejectsSizeMismatch) {
    nn::Checkpoint ckpt;
    Vector v = Vector::Zero(3), w = Vector::Zero(4);
    ckpt.add({nn::make_span("v", v)});
    EXPECT_THROW(ckpt.restore({nn::make_span("v", w)}), std::exception);
}

TEST(Checkpoint, CorruptBytesAreRejected) {
    EXPECT_THROW(nn::Checkpoint::from_bytes("not a checkpoint"), std::runtime_error);
}

class GradientBlocks : public ::testing::TestWithParam<int> {};

TEST_P(GradientBlocks, MatchCentralDifferences) {
    const auto c = testkit::run_gradient_check(GetParam());
    EXPECT_GT(c.entries, 0u) << c.block;
    EXPECT_LT(c.max_rel_error, 1e-4) << c.block;
}

INSTANTIATE_TEST_SUITE_P(All, GradientBlocks, ::testing::Range(0, 12));
