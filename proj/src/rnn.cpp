#include "rfm/rnn.hpp"

#include <cmath>
#include <string>

#include "rfm/errors.hpp"
#include "rfm/rng.hpp"

namespace rfm {

namespace {

int layer_input_dim(const Architecture& arch, std::size_t l) {
    return l == 0 ? arch.input_dim : arch.hidden[l - 1];
}

void glorot(Eigen::MatrixXd& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // column-major fill keeps the draw order identical to flatten()
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
}

void check_arch(const Architecture& arch) {
    if (arch.input_dim < 1 || arch.output_dim < 1 || arch.hidden.empty()) {
        throw ShapeError("architecture needs positive input/output width and at least one hidden layer");
    }
    for (int w : arch.hidden)
        if (w < 1) throw ShapeError("hidden widths must be positive");
}

}  // namespace

std::size_t parameter_count(const Architecture& arch) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
        const auto in = static_cast<std::size_t>(layer_input_dim(arch, l));
        const auto h = static_cast<std::size_t>(arch.hidden[l]);
        n += h * in + h * h + h;
    }
    const auto top = static_cast<std::size_t>(arch.hidden.back());
    const auto out = static_cast<std::size_t>(arch.output_dim);
    return n + out * top + out;
}

RnnParams init_params(const Architecture& arch, std::uint64_t seed) {
    check_arch(arch);
    Rng rng(seed);
    RnnParams p;
    p.arch = arch;
    for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
        const int h = arch.hidden[l];
        RecurrentLayer layer{Eigen::MatrixXd(h, layer_input_dim(arch, l)), Eigen::MatrixXd(h, h),
                             Eigen::VectorXd::Zero(h)};
        glorot(layer.Wx, rng);
        glorot(layer.Wh, rng);
        p.layers.push_back(std::move(layer));
    }
    p.Wy = Eigen::MatrixXd(arch.output_dim, arch.hidden.back());
    glorot(p.Wy, rng);
    p.by = Eigen::VectorXd::Zero(arch.output_dim);
    return p;
}

RnnParams zeros_like(const RnnParams& p) {
    RnnParams z = p;
    for_each_tensor([](auto& t) { t.setZero(); }, z);
    return z;
}

Sequence forward(const RnnParams& params, const Sequence& inputs, ForwardCache* cache) {
    const std::size_t T = inputs.size();
    const std::size_t L = params.layers.size();
    Sequence outputs(T);
    if (T == 0) return outputs;
    const Eigen::Index B = inputs[0].cols();
    const bool tanh_act = params.arch.activation == Activation::Tanh;

    std::vector<Eigen::MatrixXd> h(L);
    for (std::size_t l = 0; l < L; ++l) h[l] = Eigen::MatrixXd::Zero(params.layers[l].Wh.rows(), B);
    if (cache) {
        cache->inputs = inputs;
        cache->hidden.assign(L, Sequence(T));
    }

    for (std::size_t t = 0; t < T; ++t) {
        if (inputs[t].rows() != params.arch.input_dim || inputs[t].cols() != B) {
            throw ShapeError("input step " + std::to_string(t) + " has wrong shape");
        }
        const Eigen::MatrixXd* x = &inputs[t];
        for (std::size_t l = 0; l < L; ++l) {
            const auto& layer = params.layers[l];
            Eigen::MatrixXd a = layer.Wx * (*x);
            a.noalias() += layer.Wh * h[l];
            a.colwise() += layer.b;
            if (tanh_act) a = a.array().tanh();
            h[l] = std::move(a);
            if (cache) cache->hidden[l][t] = h[l];
            x = &h[l];
        }
        Eigen::MatrixXd y = params.Wy * (*x);
        y.colwise() += params.by;
        if (!y.allFinite()) throw NumericalError("rnn.output", "non-finite network output");
        outputs[t] = std::move(y);
    }
    return outputs;
}

Gradients backward(const RnnParams& params, const ForwardCache& cache, const Sequence& output_grad) {
    Gradients g = zeros_like(params);
    const std::size_t T = cache.inputs.size();
    const std::size_t L = params.layers.size();
    if (output_grad.size() != T) throw ShapeError("output gradient length does not match the forward pass");
    if (T == 0) return g;
    const Eigen::Index B = cache.inputs[0].cols();
    const bool tanh_act = params.arch.activation == Activation::Tanh;

    std::vector<Eigen::MatrixXd> carry(L);
    for (std::size_t l = 0; l < L; ++l) carry[l] = Eigen::MatrixXd::Zero(params.layers[l].Wh.rows(), B);

    for (std::size_t tt = T; tt-- > 0;) {
        const Eigen::MatrixXd& dY = output_grad[tt];
        const Eigen::MatrixXd& h_top = cache.hidden[L - 1][tt];
        g.Wy.noalias() += dY * h_top.transpose();
        g.by += dY.rowwise().sum();

        Eigen::MatrixXd dH = params.Wy.transpose() * dY;
        for (std::size_t l = L; l-- > 0;) {
            const auto& layer = params.layers[l];
            auto& gl = g.layers[l];
            const Eigen::MatrixXd& h = cache.hidden[l][tt];
            dH += carry[l];
            Eigen::MatrixXd dA = tanh_act ? Eigen::MatrixXd(dH.array() * (1.0 - h.array().square())) : dH;

            const Eigen::MatrixXd& in = l == 0 ? cache.inputs[tt] : cache.hidden[l - 1][tt];
            gl.Wx.noalias() += dA * in.transpose();
            if (tt > 0) gl.Wh.noalias() += dA * cache.hidden[l][tt - 1].transpose();
            gl.b += dA.rowwise().sum();

            carry[l].noalias() = layer.Wh.transpose() * dA;
            if (l > 0) dH.noalias() = layer.Wx.transpose() * dA;
        }
    }
    return g;
}

AdamState make_adam(const RnnParams& params, const AdamConfig& cfg) {
    return AdamState{cfg, zeros_like(params), zeros_like(params), 0};
}

void adam_update(RnnParams& params, const Gradients& grads, AdamState& state) {
    if (!(params.arch == grads.arch) || params.layers.size() != grads.layers.size()) {
        throw ShapeError("gradient shape mismatch");
    }
    ++state.step;
    const auto& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for_each_tensor(
        [&](auto& p, const auto& gr, auto& m, auto& v) {
            m = c.beta1 * m + (1.0 - c.beta1) * gr;
            v = c.beta2 * v + (1.0 - c.beta2) * gr.cwiseProduct(gr);
            p.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
        },
        params, grads, state.m, state.v);
}

Eigen::VectorXd flatten(const RnnParams& params) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count(params.arch)));
    Eigen::Index pos = 0;
    for_each_tensor(
        [&](const auto& t) {
            out.segment(pos, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
            pos += t.size();
        },
        params);
    if (pos != out.size()) throw ShapeError("parameter tensors do not match the architecture");
    return out;
}

RnnParams unflatten(const Eigen::VectorXd& flat, const Architecture& arch) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count(arch)) {
        throw ShapeError("flat vector has " + std::to_string(flat.size()) + " entries, architecture needs " +
                         std::to_string(parameter_count(arch)));
    }
    RnnParams p = zeros_like(init_params(arch, 0));
    Eigen::Index pos = 0;
    for_each_tensor(
        [&](auto& t) {
            Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(pos, t.size());
            pos += t.size();
        },
        p);
    return p;
}

bool all_finite(const RnnParams& p) {
    bool ok = true;
    for_each_tensor([&](const auto& t) { ok = ok && t.allFinite(); }, p);
    return ok;
}

}  // namespace rfm
