#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mlpeval/network.hpp"

using namespace mlpeval;

TEST(Sigmoid, SymmetryPoint) { EXPECT_EQ(sigmoid(0.0, 1.0), 0.5); }

TEST(Sigmoid, SymmetryIdentity) {
    for (double y : {0.1, 1.0, 3.7, 12.0, -5.5}) {
        EXPECT_NEAR(sigmoid(y, 1.0) + sigmoid(-y, 1.0), 1.0, 1e-15);
    }
}

TEST(Sigmoid, ClosedFormAtOne) { EXPECT_NEAR(sigmoid(1.0, 1.0), 0.7310585786300049, 1e-15); }

TEST(Sigmoid, MonotoneAndBounded) {
    double prev = 0.0;
    for (double y = -30.0; y <= 30.0; y += 0.25) {
        const double s = sigmoid(y, 1.0);
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(Forward, ZeroWeightsGiveHalf) {
    const MlpNetwork net(3, 4, 2);
    const std::vector<double> x{0.3, 0.9, 0.1};
    const auto act = forward(net, x);
    for (double h : act.hidden) EXPECT_EQ(h, 0.5);
    for (double o : act.output) EXPECT_EQ(o, 0.5);
}

TEST(Forward, HandEvaluatedOneOneOne) {
    MlpNetwork net(1, 1, 1);
    net.hidden_weights(0, 0) = 1.0;  // w
    net.hidden_weights(1, 0) = 0.0;  // hidden bias
    net.output_weights(0, 0) = 1.0;  // v
    net.output_weights(1, 0) = 0.0;  // output bias
    const std::vector<double> x{1.0};
    const auto act = forward(net, x);
    EXPECT_NEAR(act.hidden[0], 0.7310585786300049, 1e-15);
    EXPECT_NEAR(act.output[0], 0.6750375273768237, 1e-15);
}

TEST(Forward, BiasRowSeesConstantOne) {
    MlpNetwork net(1, 1, 1);
    net.hidden_weights(1, 0) = 2.0;
    const std::vector<double> x{0.0};
    EXPECT_NEAR(forward(net, x).hidden[0], sigmoid(2.0), 1e-15);
}

TEST(Forward, PureAndDimensionChecked) {
    Rng rng(3);
    const auto net = init_weights(3, 5, 2, rng);
    const std::vector<double> x{0.2, 0.4, 0.6};
    EXPECT_EQ(forward(net, x), forward(net, x));
    const std::vector<double> bad{0.2, 0.4};
    EXPECT_THROW(forward(net, bad), Error);
    EXPECT_THROW(predict(net, bad), Error);
}

TEST(Predict, ArgmaxWithLowestIndexTieBreak) {
    EXPECT_EQ(argmax(std::vector<double>{0.1, 0.9, 0.3}), 1u);
    EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0u);
    EXPECT_EQ(argmax(std::vector<double>{0.2, 0.7, 0.7}), 1u);
}

TEST(Predict, InvariantUnderIncreasingTransform) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.below(8));
        for (auto& x : v) x = rng.uniform01();
        std::vector<double> t(v.size());
        std::transform(v.begin(), v.end(), t.begin(), [](double x) { return std::exp(3 * x) - 7; });
        EXPECT_EQ(argmax(v), argmax(t));
    }
}

TEST(Predict, ResultInRangeAndOutputsInsideUnitInterval) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = init_weights(4, 1 + rng.below(10), 1 + rng.below(6), rng);
        std::vector<double> x(4);
        for (auto& v : x) v = rng.uniform01();
        const auto act = forward(net, x);
        for (double o : act.output) {
            EXPECT_GT(o, 0.0);
            EXPECT_LT(o, 1.0);
        }
        EXPECT_LT(predict(net, x), net.n_out);
    }
}

TEST(InitWeights, DeterministicGivenSeed) {
    Rng a(77), b(77);
    EXPECT_EQ(init_weights(4, 60, 3, a), init_weights(4, 60, 3, b));
}

TEST(InitWeights, WeightCountFormula) {
    Rng rng(0);
    EXPECT_EQ(init_weights(4, 60, 3, rng).weight_count(), 483u);
    EXPECT_EQ(init_weights(9, 80, 28, rng).weight_count(), (9u + 1) * 80 + (80 + 1) * 28);
}

TEST(InitWeights, SupportIsHalfUnitInterval) {
    Rng rng(123);
    double lo = 1.0, hi = -1.0;
    std::size_t count = 0;
    while (count < 10000) {
        const auto net = init_weights(10, 50, 5, rng);
        for (double w : net.hidden_weights.values()) lo = std::min(lo, w), hi = std::max(hi, w), ++count;
        for (double w : net.output_weights.values()) lo = std::min(lo, w), hi = std::max(hi, w), ++count;
    }
    EXPECT_GE(lo, -0.5);
    EXPECT_LE(hi, 0.5);
    EXPECT_LT(lo, -0.45);
    EXPECT_GT(hi, 0.45);
}

TEST(InitWeights, RejectsZeroDimension) {
    Rng rng(0);
    EXPECT_THROW(init_weights(0, 3, 2, rng), Error);
    EXPECT_THROW(init_weights(3, 0, 2, rng), Error);
    EXPECT_THROW(init_weights(3, 3, 0, rng), Error);
}

TEST(Serialization, JsonReloadReproducesPredictionsBitExactly) {
    Rng rng(9);
    const auto net = init_weights(6, 12, 4, rng);
    const auto text = nlohmann::json(net).dump();
    const auto back = nlohmann::json::parse(text).get<MlpNetwork>();
    EXPECT_EQ(back, net);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform01();
        EXPECT_EQ(forward(back, x), forward(net, x));
    }
}

TEST(Serialization, RejectsShapeMismatch) {
    auto j = nlohmann::json(MlpNetwork(2, 2, 2));
    j["hidden_weights"].push_back(1.0);
    EXPECT_THROW(j.get<MlpNetwork>(), Error);
}
