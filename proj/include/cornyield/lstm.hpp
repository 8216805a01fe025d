#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cornyield/core.hpp"

namespace cornyield::lstm {

// Gate blocks are stacked in this order inside U, W and b.
enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };
inline constexpr std::size_t kGates = 4;

struct LayerParams {
    Matrix U;               // 4H x input_size
    Matrix W;               // 4H x H
    std::vector<double> b;  // 4H

    std::size_t hidden() const noexcept { return W.cols(); }
    std::size_t input_size() const noexcept { return U.cols(); }
    bool operator==(const LayerParams&) const = default;
};

// Trainable parameters: stacked LSTM layers and the linear head.
// The same structure doubles as the gradient container.
struct Params {
    std::vector<LayerParams> layers;
    std::vector<double> head_w;  // H of the last layer
    double head_b = 0.0;

    Params zeros_like() const;
    std::size_t count() const;
    bool operator==(const Params&) const = default;
};

// Calls fn(name, values) for each block in a fixed order:
// layer<k>.U, layer<k>.W, layer<k>.b for every layer, then head.V, head.c.
template <class P, class Fn>
void for_each_block(P& params, Fn&& fn) {
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        auto& layer = params.layers[k];
        const std::string prefix = "layer" + std::to_string(k) + ".";
        fn(prefix + "U", layer.U.data());
        fn(prefix + "W", layer.W.data());
        fn(prefix + "b", std::span(layer.b));
    }
    fn(std::string("head.V"), std::span(params.head_w));
    fn(std::string("head.c"), std::span(&params.head_b, 1));
}

struct Layout {
    std::size_t input_size = 0;
    std::vector<std::size_t> hidden_sizes;  // one entry per layer, 1 or 2 layers

    bool operator==(const Layout&) const = default;
};

// Inputs are z-scored per feature before entering the network; predictions
// leave as target_mean + target_std * (head_w . h_T + head_b). The identity
// defaults (mean 0, std 1) apply to freshly initialized models.
struct NormStats {
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    double target_mean = 0.0;
    double target_std = 1.0;

    bool operator==(const NormStats&) const = default;
};

struct LstmModel {
    Params params;
    double dropout_rate = 0.0;
    NormStats norm;

    Layout layout() const;
    bool operator==(const LstmModel&) const = default;
};

// Throws when layer count, shapes, dropout or normalization are invalid.
void validate(const LstmModel& model);

// Weights uniform on [-1/sqrt(H), 1/sqrt(H)] per layer (head uses the last
// layer's H), biases zero except the forget gate at 1.0, identity NormStats.
LstmModel init_params(const Layout& layout, std::uint64_t seed, double dropout_rate = 0.0);

struct LayerState {
    std::vector<double> h;
    std::vector<double> c;

    static LayerState zeros(std::size_t hidden);
    bool operator==(const LayerState&) const = default;
};

using LstmState = std::vector<LayerState>;

// i, f, o = sigmoid(U x + W h + b); g = tanh(U x + W h + b)
// c' = f * c + i * g;  h' = o * tanh(c')
LayerState cell_step(std::span<const double> x, const LayerState& state, const LayerParams& params);

enum class Mode { Train, Infer };

// Activations retained for backpropagation.
struct LayerCache {
    Matrix input;  // T x input_size, as consumed by the layer
    Matrix gates;  // T x 4H, post-activation
    Matrix c;      // T x H
    Matrix tanh_c; // T x H
    Matrix h;      // T x H
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    // masks[k] scales layer k's output (inverted dropout); empty in infer mode
    std::vector<std::vector<double>> masks;
    std::vector<double> head_input;  // masked h_T of the last layer
    double raw_output = 0.0;         // head_w . head_input + head_b
    double prediction = 0.0;
};

// Runs the stack over a feature-major F x T sequence and returns the scalar
// prediction. In train mode a fixed per-sequence mask drawn from
// dropout_seed drops units of every layer's output (between layers and
// before the head), scaled by 1/(1-p). Infer mode never masks.
double forward(const Matrix& x, const LstmModel& model, Mode mode = Mode::Infer, std::uint64_t dropout_seed = 0,
               ForwardCache* cache = nullptr);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(prediction).
// Contributions are summed over time steps in a fixed order.
void backward(const ForwardCache& cache, const LstmModel& model, double dloss_dpred, Params& grad);

// Many-to-one vanilla RNN, h_t = tanh(U x_t + W h_{t-1} + b), prediction
// V . h_T + c. Kept as a small reference recurrence for gradient tests; it
// operates on already-normalized inputs.
namespace rnn {

struct RnnParams {
    Matrix U;  // H x F
    Matrix W;  // H x H
    std::vector<double> b;
    std::vector<double> V;
    double c = 0.0;
};

RnnParams init(std::size_t input_size, std::size_t hidden, std::uint64_t seed);
double forward(const Matrix& x, const RnnParams& p);
// Gradient of 0.5 * (prediction - target)^2, flattened in the order U, W, b, V, c.
std::vector<double> gradient(const Matrix& x, double target, const RnnParams& p);
std::vector<double> flatten(const RnnParams& p);
RnnParams unflatten(std::span<const double> flat, std::size_t input_size, std::size_t hidden);

}  // namespace rnn

}  // namespace cornyield::lstm
