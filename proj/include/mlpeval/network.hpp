#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "mlpeval/error.hpp"
#include "mlpeval/matrix.hpp"
#include "mlpeval/random.hpp"

namespace mlpeval {

/// Single-hidden-layer perceptron. Biases are stored as the last row of each
/// weight matrix and see a constant input of 1.
///
///   hidden_weights: (n_in + 1) x n_hidden, entry (i, j) connects input i to hidden j
///   output_weights: (n_hidden + 1) x n_out, entry (j, k) connects hidden j to output k
struct MlpNetwork {
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    std::size_t n_out = 0;
    Matrix hidden_weights;
    Matrix output_weights;

    MlpNetwork() = default;
    MlpNetwork(std::size_t inputs, std::size_t hidden, std::size_t outputs)
        : n_in(inputs),
          n_hidden(hidden),
          n_out(outputs),
          hidden_weights(inputs + 1, hidden),
          output_weights(hidden + 1, outputs) {
        if (inputs == 0 || hidden == 0 || outputs == 0) {
            throw Error("network dimensions must all be at least 1");
        }
    }

    std::size_t weight_count() const noexcept { return hidden_weights.size() + output_weights.size(); }

    friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;
};

struct Activation {
    std::vector<double> hidden;
    std::vector<double> output;

    friend bool operator==(const Activation&, const Activation&) = default;
};

inline double sigmoid(double y, double c = 1.0) { return 1.0 / (1.0 + std::exp(-c * y)); }

namespace detail {

inline void check_input(const MlpNetwork& net, std::span<const double> x) {
    if (x.size() != net.n_in) {
        throw Error("input has " + std::to_string(x.size()) + " features, network expects " +
                    std::to_string(net.n_in));
    }
}

}  // namespace detail

/// Writes the forward pass into `act`, reusing its storage.
inline void forward_into(const MlpNetwork& net, std::span<const double> x, Activation& act, double c = 1.0) {
    detail::check_input(net, x);
    act.hidden.resize(net.n_hidden);
    act.output.resize(net.n_out);
    const auto bias_h = net.hidden_weights.row(net.n_in);
    for (std::size_t j = 0; j < net.n_hidden; ++j) act.hidden[j] = bias_h[j];
    for (std::size_t i = 0; i < net.n_in; ++i) {
        const double xi = x[i];
        const auto w = net.hidden_weights.row(i);
        for (std::size_t j = 0; j < net.n_hidden; ++j) act.hidden[j] += w[j] * xi;
    }
    for (auto& h : act.hidden) h = sigmoid(h, c);

    const auto bias_o = net.output_weights.row(net.n_hidden);
    for (std::size_t k = 0; k < net.n_out; ++k) act.output[k] = bias_o[k];
    for (std::size_t j = 0; j < net.n_hidden; ++j) {
        const double hj = act.hidden[j];
        const auto v = net.output_weights.row(j);
        for (std::size_t k = 0; k < net.n_out; ++k) act.output[k] += v[k] * hj;
    }
    for (auto& o : act.output) o = sigmoid(o, c);
}

inline Activation forward(const MlpNetwork& net, std::span<const double> x, double c = 1.0) {
    Activation act;
    forward_into(net, x, act, c);
    return act;
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw Error("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

inline std::size_t predict(const MlpNetwork& net, std::span<const double> x, double c = 1.0) {
    return argmax(forward(net, x, c).output);
}

/// Every weight and bias drawn independently from U[-0.5, 0.5].
inline MlpNetwork init_weights(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, Rng& rng) {
    MlpNetwork net(n_in, n_hidden, n_out);
    for (auto& w : net.hidden_weights.values()) w = rng.uniform(-0.5, 0.5);
    for (auto& w : net.output_weights.values()) w = rng.uniform(-0.5, 0.5);
    return net;
}

inline void to_json(nlohmann::json& j, const MlpNetwork& net) {
    j = nlohmann::json{{"n_in", net.n_in},
                       {"n_hidden", net.n_hidden},
                       {"n_out", net.n_out},
                       {"hidden_weights", std::vector<double>(net.hidden_weights.values().begin(),
                                                              net.hidden_weights.values().end())},
                       {"output_weights", std::vector<double>(net.output_weights.values().begin(),
                                                              net.output_weights.values().end())}};
}

inline void from_json(const nlohmann::json& j, MlpNetwork& net) {
    MlpNetwork loaded(j.at("n_in").get<std::size_t>(), j.at("n_hidden").get<std::size_t>(),
                      j.at("n_out").get<std::size_t>());
    loaded.hidden_weights = Matrix(loaded.n_in + 1, loaded.n_hidden,
                                   j.at("hidden_weights").get<std::vector<double>>());
    loaded.output_weights = Matrix(loaded.n_hidden + 1, loaded.n_out,
                                   j.at("output_weights").get<std::vector<double>>());
    for (double w : loaded.hidden_weights.values()) {
        if (!std::isfinite(w)) throw Error("network file contains a non-finite weight");
    }
    for (double w : loaded.output_weights.values()) {
        if (!std::isfinite(w)) throw Error("network file contains a non-finite weight");
    }
    net = std::move(loaded);
}

}  // namespace mlpeval
