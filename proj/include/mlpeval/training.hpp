#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlpeval/data.hpp"
#include "mlpeval/error.hpp"
#include "mlpeval/network.hpp"
#include "mlpeval/random.hpp"

namespace mlpeval {

struct TrainConfig {
    double eta = 0.3;   // learning rate
    double mu = 0.1;    // momentum factor
    double c = 1.0;     // sigmoid steepness
    double beta = 1.0;  // F-score weight, carried through to evaluation
    std::size_t n_hidden = 60;
    std::size_t epochs = 500;
    std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& config) {
    if (!(config.eta > 0.0)) throw Error("eta must be positive");
    if (!(config.mu >= 0.0 && config.mu < 1.0)) throw Error("mu must lie in [0, 1)");
    if (!(config.c > 0.0)) throw Error("sigmoid constant must be positive");
    if (!(config.beta > 0.0)) throw Error("beta must be positive");
    if (config.n_hidden == 0) throw Error("n_hidden must be at least 1");
    if (config.epochs == 0) throw Error("epochs must be at least 1");
}

struct TrainingExample {
    std::vector<double> x;
    std::vector<double> t;
};

struct TrainOutcome {
    MlpNetwork net;
    std::vector<double> mse_trace;
    double train_time_s = 0.0;
};

inline std::vector<double> encode_one_hot(std::size_t label, std::size_t m) {
    if (label >= m) {
        throw Error("label " + std::to_string(label) + " out of range for " + std::to_string(m) +
                    " classes");
    }
    std::vector<double> t(m, 0.0);
    t[label] = 1.0;
    return t;
}

/// Error term of an output unit: o(1-o)(t-o).
inline double output_delta(double o_k, double t_k) { return o_k * (1.0 - o_k) * (t_k - o_k); }

/// Error term of a hidden unit: o(1-o) * sum_k w_k * delta_k, where w_k are
/// the weights from this unit to each output.
inline double hidden_delta(double o_h, std::span<const double> downstream_weights,
                           std::span<const double> delta_out) {
    if (downstream_weights.size() != delta_out.size()) {
        throw Error("hidden_delta: weight and delta vectors differ in length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < delta_out.size(); ++k) sum += downstream_weights[k] * delta_out[k];
    return o_h * (1.0 - o_h) * sum;
}

struct WeightUpdate {
    double weight;
    double update;
};

/// Momentum rule: dw = eta * delta_j * x_i + mu * dw_prev, w += dw.
inline WeightUpdate apply_update(double weight, double delta_j, double input_i, double prev_update,
                                 double eta, double mu) {
    const double dw = eta * delta_j * input_i + mu * prev_update;
    return {weight + dw, dw};
}

/// Per-sample state for backpropagation. prev_* hold the previous update of
/// every weight and start at zero.
struct BackpropScratch {
    Activation act;
    std::vector<double> delta_out;
    std::vector<double> delta_hidden;
    Matrix prev_hidden_updates;
    Matrix prev_output_updates;

    BackpropScratch() = default;
    explicit BackpropScratch(const MlpNetwork& net)
        : delta_out(net.n_out),
          delta_hidden(net.n_hidden),
          prev_hidden_updates(net.n_in + 1, net.n_hidden),
          prev_output_updates(net.n_hidden + 1, net.n_out) {}
};

/// One stochastic update on a single example: forward, output and hidden
/// deltas from the pre-update weights, then the momentum rule on every weight
/// and bias.
inline void backprop_step(MlpNetwork& net, BackpropScratch& s, std::span<const double> x,
                          std::span<const double> t, double eta, double mu, double c = 1.0) {
    if (t.size() != net.n_out) throw Error("target length does not match network outputs");
    forward_into(net, x, s.act, c);

    for (std::size_t k = 0; k < net.n_out; ++k) s.delta_out[k] = output_delta(s.act.output[k], t[k]);
    for (std::size_t h = 0; h < net.n_hidden; ++h) {
        s.delta_hidden[h] = hidden_delta(s.act.hidden[h], net.output_weights.row(h), s.delta_out);
    }

    for (std::size_t h = 0; h <= net.n_hidden; ++h) {
        const double input = h < net.n_hidden ? s.act.hidden[h] : 1.0;
        auto w = net.output_weights.row(h);
        auto prev = s.prev_output_updates.row(h);
        for (std::size_t k = 0; k < net.n_out; ++k) {
            const auto u = apply_update(w[k], s.delta_out[k], input, prev[k], eta, mu);
            w[k] = u.weight;
            prev[k] = u.update;
        }
    }
    for (std::size_t i = 0; i <= net.n_in; ++i) {
        const double input = i < net.n_in ? x[i] : 1.0;
        auto w = net.hidden_weights.row(i);
        auto prev = s.prev_hidden_updates.row(i);
        for (std::size_t h = 0; h < net.n_hidden; ++h) {
            const auto u = apply_update(w[h], s.delta_hidden[h], input, prev[h], eta, mu);
            w[h] = u.weight;
            prev[h] = u.update;
        }
    }
}

/// Mean over examples of the summed squared error across output units.
inline double mse(const MlpNetwork& net, std::span<const TrainingExample> examples, double c = 1.0) {
    if (examples.empty()) throw Error("mse of an empty example set");
    Activation act;
    double total = 0.0;
    for (const auto& ex : examples) {
        if (ex.t.size() != net.n_out) throw Error("target length does not match network outputs");
        forward_into(net, ex.x, act, c);
        for (std::size_t k = 0; k < net.n_out; ++k) {
            const double r = ex.t[k] - act.output[k];
            total += r * r;
        }
    }
    return total / static_cast<double>(examples.size());
}

/// Same as above with one-hot targets built from dataset labels.
inline double mse(const MlpNetwork& net, const Dataset& data, std::span<const std::size_t> indices,
                  double c = 1.0) {
    if (indices.empty()) throw Error("mse of an empty example set");
    if (net.n_out != data.m()) throw Error("network outputs do not match class count");
    Activation act;
    double total = 0.0;
    for (auto idx : indices) {
        forward_into(net, data.features.row(idx), act, c);
        for (std::size_t k = 0; k < net.n_out; ++k) {
            const double r = (k == data.labels[idx] ? 1.0 : 0.0) - act.output[k];
            total += r * r;
        }
    }
    return total / static_cast<double>(indices.size());
}

/// Fixed-budget SGD with momentum. Weights come from init_weights(rng), each
/// epoch visits the training indices in a fresh rng-shuffled order, and the
/// training-set MSE is appended after every epoch.
inline TrainOutcome train(const Dataset& data, std::span<const std::size_t> indices,
                          const TrainConfig& config, Rng& rng) {
    validate(config);
    if (indices.empty()) throw Error("training set is empty");
    for (auto idx : indices) {
        if (idx >= data.n()) throw Error("training index out of range");
    }

    const auto start = std::chrono::steady_clock::now();
    TrainOutcome out;
    out.net = init_weights(data.d(), config.n_hidden, data.m(), rng);
    out.mse_trace.reserve(config.epochs);

    BackpropScratch scratch(out.net);
    std::vector<std::size_t> order(indices.begin(), indices.end());
    std::vector<double> target(data.m(), 0.0);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (auto idx : order) {
            target[data.labels[idx]] = 1.0;
            backprop_step(out.net, scratch, data.features.row(idx), target, config.eta, config.mu,
                          config.c);
            target[data.labels[idx]] = 0.0;
        }
        out.mse_trace.push_back(mse(out.net, data, indices, config.c));
    }
    out.train_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace mlpeval
