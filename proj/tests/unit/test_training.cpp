#include <cmath>

#include <gtest/gtest.h>

#include "mlpeval/training.hpp"
#include "support/oracles.hpp"

using namespace mlpeval;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform01();
    return x;
}

// Four separable points in two dimensions, two classes.
Dataset toy_dataset() {
    Dataset ds;
    ds.name = "toy";
    ds.features = Matrix(4, 2, {0.0, 0.0, 0.1, 0.2, 1.0, 0.9, 0.8, 1.0});
    ds.labels = {0, 0, 1, 1};
    ds.class_names = {"a", "b"};
    return ds;
}

}  // namespace

TEST(OneHot, PositionalDefinition) {
    EXPECT_EQ(encode_one_hot(1, 3), (std::vector<double>{0, 1, 0}));
    EXPECT_EQ(encode_one_hot(0, 2), (std::vector<double>{1, 0}));
    EXPECT_EQ(encode_one_hot(2, 3), (std::vector<double>{0, 0, 1}));
    EXPECT_THROW(encode_one_hot(3, 3), Error);
}

TEST(OutputDelta, Examples) {
    EXPECT_EQ(output_delta(0.5, 1.0), 0.125);
    EXPECT_EQ(output_delta(0.37, 0.37), 0.0);
    EXPECT_NEAR(output_delta(0.2, 0.0), -0.032, 1e-17);
}

TEST(HiddenDelta, Examples) {
    EXPECT_EQ(hidden_delta(0.4, std::vector<double>{0.3, -0.2}, std::vector<double>{0.0, 0.0}), 0.0);
    EXPECT_EQ(hidden_delta(0.5, std::vector<double>{1.0}, std::vector<double>{0.125}), 0.03125);
    EXPECT_THROW(hidden_delta(0.5, std::vector<double>{1.0, 2.0}, std::vector<double>{0.1}), Error);
}

// Error terms of the hidden units against -dE/dz_h from central differences
// on a 3-4-2 net.
TEST(HiddenDelta, MatchesFiniteDifferenceOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = init_weights(3, 4, 2, rng);
        const auto x = random_input(rng, 3);
        const auto t = encode_one_hot(rng.below(2), 2);
        const auto act = forward(net, x);
        std::vector<double> d_out(2);
        for (std::size_t k = 0; k < 2; ++k) d_out[k] = output_delta(act.output[k], t[k]);
        const auto fd = oracle::fd_hidden_error_terms(net, x, t, 1e-6L);
        for (std::size_t h = 0; h < 4; ++h) {
            const double dh = hidden_delta(act.hidden[h], net.output_weights.row(h), d_out);
            EXPECT_LE(oracle::relative_error(dh, fd[h]), 1e-6) << "unit " << h;
        }
    }
}

TEST(ApplyUpdate, Examples) {
    const auto a = apply_update(0.0, 0.125, 1.0, 0.0, 1.0, 0.0);
    EXPECT_EQ(a.weight, 0.125);
    const auto b = apply_update(0.42, 0.0, 0.7, 0.0, 0.3, 0.1);
    EXPECT_EQ(b.weight, 0.42);
    EXPECT_EQ(b.update, 0.0);
    // eta * delta * input = 0.05, mu * prev = 0.02
    const auto c = apply_update(0.0, 0.5, 1.0, 0.2, 0.1, 0.1);
    EXPECT_NEAR(c.update, 0.07, 1e-16);
}

// With mu = 0 the per-sample update is -eta * dE/dw for every weight.
TEST(BackpropStep, UpdateIsNegativeScaledFiniteDifferenceGradient) {
    Rng rng(31337);
    const double eta = 0.3;
    for (int trial = 0; trial < 10; ++trial) {
        auto net = init_weights(3, 5, 2, rng);
        const auto x = random_input(rng, 3);
        const auto t = encode_one_hot(rng.below(2), 2);
        const auto grad = oracle::fd_weight_gradient(net, x, t, 1e-8);
        BackpropScratch s(net);
        backprop_step(net, s, x, t, eta, 0.0);
        std::vector<double> updates(s.prev_hidden_updates.values().begin(), s.prev_hidden_updates.values().end());
        updates.insert(updates.end(), s.prev_output_updates.values().begin(), s.prev_output_updates.values().end());
        ASSERT_EQ(updates.size(), grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) {
            EXPECT_LE(oracle::relative_error(updates[i], -eta * grad[i]), 1e-4) << "weight " << i;
        }
    }
}

TEST(BackpropStep, MomentumRecurrenceHoldsExactly) {
    Rng rng(8);
    auto net = init_weights(3, 5, 2, rng);
    const double eta = 0.3, mu = 0.1;
    BackpropScratch s(net);
    for (int step = 0; step < 5; ++step) {
        const auto x = random_input(rng, 3);
        const auto t = encode_one_hot(rng.below(2), 2);
        const auto prev_out = s.prev_output_updates;
        const auto before = forward(net, x);
        backprop_step(net, s, x, t, eta, mu);
        // Output layer: dw(n) - mu * dw(n-1) == eta * delta_k * hidden_j.
        for (std::size_t j = 0; j <= net.n_hidden; ++j) {
            const double input = j < net.n_hidden ? before.hidden[j] : 1.0;
            for (std::size_t k = 0; k < net.n_out; ++k) {
                const double expected = eta * output_delta(before.output[k], t[k]) * input;
                EXPECT_EQ(s.prev_output_updates(j, k), expected + mu * prev_out(j, k));
            }
        }
    }
}

TEST(Mse, ZeroWhenOutputsMatchTargets) {
    const MlpNetwork net(2, 3, 2);  // all outputs 0.5
    const std::vector<TrainingExample> ex{{{0.1, 0.2}, {0.5, 0.5}}, {{0.9, 0.3}, {0.5, 0.5}}};
    EXPECT_EQ(mse(net, ex), 0.0);
}

TEST(Mse, AllHalfOutputsGiveQuarterPerUnit) {
    const MlpNetwork net(2, 3, 3);
    const std::vector<TrainingExample> ex{{{0.1, 0.2}, encode_one_hot(0, 3)}, {{0.9, 0.3}, encode_one_hot(2, 3)}};
    EXPECT_EQ(mse(net, ex), 0.75);
}

TEST(Mse, CanExceedOneWithManyClasses) {
    // A confident wrong answer with one-hot targets over 28 outputs.
    MlpNetwork net(1, 1, 28);
    net.output_weights(1, 0) = -10.0;
    for (std::size_t k = 1; k < 28; ++k) net.output_weights(1, k) = -10.0;
    net.output_weights(1, 5) = 10.0;
    const std::vector<TrainingExample> ex{{{0.5}, encode_one_hot(0, 28)}};
    EXPECT_GT(mse(net, ex), 1.0);
}

TEST(Mse, EmptySetIsError) {
    const MlpNetwork net(1, 1, 1);
    EXPECT_THROW(mse(net, std::span<const TrainingExample>{}), Error);
}

TEST(Train, DecreasesErrorOnSeparableToy) {
    const auto ds = toy_dataset();
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    TrainConfig cfg;
    cfg.n_hidden = 4;
    cfg.epochs = 200;
    Rng rng(5);
    const auto out = train(ds, idx, cfg, rng);
    ASSERT_EQ(out.mse_trace.size(), 200u);
    EXPECT_LT(out.mse_trace.back(), out.mse_trace.front());
    for (double v : out.mse_trace) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
    }
}

TEST(Train, DeterministicGivenSeed) {
    const auto ds = toy_dataset();
    const std::vector<std::size_t> idx{3, 1, 0, 2};
    TrainConfig cfg;
    cfg.n_hidden = 6;
    cfg.epochs = 30;
    Rng a(99), b(99);
    const auto ra = train(ds, idx, cfg, a);
    const auto rb = train(ds, idx, cfg, b);
    EXPECT_EQ(ra.mse_trace, rb.mse_trace);
    EXPECT_EQ(ra.net, rb.net);
}

TEST(Train, RejectsInvalidInput) {
    const auto ds = toy_dataset();
    TrainConfig cfg;
    Rng rng(0);
    EXPECT_THROW(train(ds, std::vector<std::size_t>{}, cfg, rng), Error);
    cfg.mu = 1.0;
    EXPECT_THROW(train(ds, std::vector<std::size_t>{0}, cfg, rng), Error);
    cfg.mu = 0.1;
    cfg.epochs = 0;
    EXPECT_THROW(train(ds, std::vector<std::size_t>{0}, cfg, rng), Error);
}
