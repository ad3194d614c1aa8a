#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace rfm {

enum class Activation : std::uint8_t { Tanh = 0, Identity = 1 };

struct Architecture {
    int input_dim = 4;
    std::vector<int> hidden{64, 64};
    int output_dim = 2;
    Activation activation = Activation::Tanh;

    bool operator==(const Architecture&) const = default;
};

/// h_t = g(Wx x_t + Wh h_{t-1} + b)
struct RecurrentLayer {
    Eigen::MatrixXd Wx;
    Eigen::MatrixXd Wh;
    Eigen::VectorXd b;
};

/// Stacked simple RNN with a linear read-out y_t = Wy h_t + by.
struct RnnParams {
    Architecture arch;
    std::vector<RecurrentLayer> layers;
    Eigen::MatrixXd Wy;
    Eigen::VectorXd by;
};

/// Same shape-tree as the parameters.
using Gradients = RnnParams;

/// One matrix per time step, shaped (features x batch).
using Sequence = std::vector<Eigen::MatrixXd>;

std::size_t parameter_count(const Architecture& arch);

/// Glorot-uniform weights, zero biases.
RnnParams init_params(const Architecture& arch, std::uint64_t seed);
RnnParams zeros_like(const RnnParams& p);

/// Calls f(a_tensor, b_tensor, ...) for every tensor in canonical order
/// (per layer: Wx, Wh, b; then Wy, by). Works on const and mutable trees.
template <class F, class P, class... Ps>
void for_each_tensor(F&& f, P& first, Ps&... rest) {
    for (std::size_t l = 0; l < first.layers.size(); ++l) {
        f(first.layers[l].Wx, rest.layers[l].Wx...);
        f(first.layers[l].Wh, rest.layers[l].Wh...);
        f(first.layers[l].b, rest.layers[l].b...);
    }
    f(first.Wy, rest.Wy...);
    f(first.by, rest.by...);
}

/// Hidden states of every layer at every step, kept for BPTT.
struct ForwardCache {
    Sequence inputs;
    std::vector<Sequence> hidden;  // [layer][t]
};

/// Runs the network from h_0 = 0. Throws NumericalError on a non-finite output.
Sequence forward(const RnnParams& params, const Sequence& inputs, ForwardCache* cache = nullptr);

/// Backpropagation through time. `output_grad[t]` is dLoss/dy_t.
Gradients backward(const RnnParams& params, const ForwardCache& cache, const Sequence& output_grad);

struct AdamConfig {
    double lr = 1.0e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1.0e-8;
};

struct AdamState {
    AdamConfig cfg;
    RnnParams m;
    RnnParams v;
    long step = 0;
};

AdamState make_adam(const RnnParams& params, const AdamConfig& cfg = {});

/// Bias-corrected Adam step, in place.
void adam_update(RnnParams& params, const Gradients& grads, AdamState& state);

/// Canonical flat vector (tensor order of for_each_tensor, column-major inside a tensor).
Eigen::VectorXd flatten(const RnnParams& params);
/// Throws ShapeError when the length does not match the architecture.
RnnParams unflatten(const Eigen::VectorXd& flat, const Architecture& arch);

bool all_finite(const RnnParams& p);

}  // namespace rfm
