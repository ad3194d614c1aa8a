#include "rfm/tasks.hpp"

#include <algorithm>
#include <stdexcept>

namespace rfm {

KineticRanges kinetic_ranges(ReactorKind kind) {
    KineticRanges r{{8.04e6, 8.88e6}, {4.75e4, 5.25e4}, {-1.21e4, -1.09e4}, {0.219, 0.243}, {950.0, 1050.0}};
    if (kind == ReactorKind::Batch) r.k0 = {0.0, 9.31e8};
    return r;
}

namespace {

// Strictly positive draw for quantities used as divisors.
double positive(Rng& rng, const Interval& i) {
    for (;;) {
        const double x = uniform(rng, i.lo, i.hi);
        if (x > 0.0) return x;
    }
}

}  // namespace

TaskSpec sample_task(ReactorKind kind, int order, std::uint64_t seed) {
    if (order < 1) throw std::invalid_argument("reaction order must be >= 1");
    Rng rng(seed);
    const auto kin = kinetic_ranges(kind);

    TaskSpec t;
    t.kind = kind;
    t.order = order;
    t.seed = seed;
    t.op_ranges = default_op_ranges(kind);
    t.timing = default_timing(kind);

    switch (kind) {
        case ReactorKind::Cstr: {
            const CstrRanges r;
            CstrParams p;
            p.F = uniform(rng, r.F.lo, r.F.hi);
            p.V = positive(rng, r.V);
            p.T0 = uniform(rng, r.T0.lo, r.T0.hi);
            p.CA0s = uniform(rng, r.CA0s.lo, r.CA0s.hi);
            p.Qs = r.Qs;
            p.rhoL = uniform(rng, kin.rhoL.lo, kin.rhoL.hi);
            p.Cp = uniform(rng, kin.Cp.lo, kin.Cp.hi);
            p.Ea = uniform(rng, kin.Ea.lo, kin.Ea.hi);
            p.k0 = uniform(rng, kin.k0.lo, kin.k0.hi);
            p.dH = uniform(rng, kin.dH.lo, kin.dH.hi);
            t.params = p;
            break;
        }
        case ReactorKind::Batch: {
            const BrRanges r;
            BrParams p;
            p.V = positive(rng, r.V);
            p.Qs = 0.0;
            p.rhoL = uniform(rng, kin.rhoL.lo, kin.rhoL.hi);
            p.Cp = uniform(rng, kin.Cp.lo, kin.Cp.hi);
            p.Ea = uniform(rng, kin.Ea.lo, kin.Ea.hi);
            p.k0 = uniform(rng, kin.k0.lo, kin.k0.hi);
            p.dH = uniform(rng, kin.dH.lo, kin.dH.hi);
            t.params = p;
            break;
        }
        case ReactorKind::Pfr: {
            const PfrRanges r;
            PfrParams p;
            p.A = positive(rng, r.A);
            p.Ac = uniform(rng, r.Ac.lo, r.Ac.hi);
            p.L = r.L;
            p.u = uniform(rng, r.u.lo, r.u.hi);
            p.U = uniform(rng, r.U.lo, r.U.hi);
            p.N = r.N;
            p.Tcs = uniform(rng, r.Tcs.lo, r.Tcs.hi);
            p.rhoL = uniform(rng, kin.rhoL.lo, kin.rhoL.hi);
            p.Cp = uniform(rng, kin.Cp.lo, kin.Cp.hi);
            p.Ea = uniform(rng, kin.Ea.lo, kin.Ea.hi);
            p.k0 = uniform(rng, kin.k0.lo, kin.k0.hi);
            p.dH = uniform(rng, kin.dH.lo, kin.dH.hi);
            t.params = pfr_to_integrator_units(p);
            break;
        }
    }
    return t;
}

NormSpec norm_spec(const OpRanges& r) { return NormSpec{{r.T, r.CA, r.u1, r.u2}}; }

NormSpec norm_spec(ReactorKind kind) { return norm_spec(default_op_ranges(kind)); }

ModelInput model_input(ReactorKind kind, const NormSpec& norm, const State& x, const ControlInput& u) {
    const auto [u1, u2] = control_features(kind, u);
    return {normalize(x.T, norm.input[0]), normalize(x.CA, norm.input[1]), normalize(u1, norm.input[2]),
            normalize(u2, norm.input[3])};
}

ModelIO build_model_io(ReactorKind kind, const NormSpec& norm, const Sample& sample) {
    ModelIO io;
    const auto in = model_input(kind, norm, sample.x0, sample.u);
    io.inputs.assign(sample.steps.size(), in);
    io.targets.reserve(sample.steps.size());
    for (const auto& s : sample.steps) io.targets.push_back({normalize(s.T, norm.T()), normalize(s.CA, norm.CA())});
    return io;
}

ModelIO build_model_io(const TaskSpec& task, const Sample& sample) {
    return build_model_io(task.kind, norm_spec(task.op_ranges), sample);
}

State denormalize_state(const NormSpec& norm, const ModelTarget& y) {
    return {denormalize(y[0], norm.T()), denormalize(y[1], norm.CA())};
}

Sequence input_batch(std::span<const ModelIO> samples) {
    if (samples.empty()) return {};
    const std::size_t T = samples.front().inputs.size();
    const auto B = static_cast<Eigen::Index>(samples.size());
    Sequence seq(T, Eigen::MatrixXd(4, B));
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& io = samples[static_cast<std::size_t>(b)];
        if (io.inputs.size() != T) throw std::invalid_argument("samples in a batch must share the sequence length");
        for (std::size_t t = 0; t < T; ++t)
            for (int f = 0; f < 4; ++f) seq[t](f, b) = io.inputs[t][static_cast<std::size_t>(f)];
    }
    return seq;
}

Sequence target_batch(std::span<const ModelIO> samples) {
    if (samples.empty()) return {};
    const std::size_t T = samples.front().targets.size();
    const auto B = static_cast<Eigen::Index>(samples.size());
    Sequence seq(T, Eigen::MatrixXd(2, B));
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& io = samples[static_cast<std::size_t>(b)];
        if (io.targets.size() != T) throw std::invalid_argument("samples in a batch must share the sequence length");
        for (std::size_t t = 0; t < T; ++t) {
            seq[t](0, b) = io.targets[t][0];
            seq[t](1, b) = io.targets[t][1];
        }
    }
    return seq;
}

Sequence input_batch(std::span<const ModelInput> points, int steps) {
    const auto B = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd x(4, B);
    for (Eigen::Index b = 0; b < B; ++b)
        for (int f = 0; f < 4; ++f) x(f, b) = points[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
    return Sequence(static_cast<std::size_t>(steps), x);
}

std::vector<OperatingPoint> draw_collocation(const TaskSpec& task, std::span<const Sample> shots, int M,
                                             std::uint64_t seed) {
    const auto norm = norm_spec(task.op_ranges);
    std::vector<ModelInput> taken;
    taken.reserve(shots.size());
    for (const auto& s : shots) taken.push_back(model_input(task.kind, norm, s.x0, s.u));

    Rng rng(seed);
    std::vector<OperatingPoint> out;
    out.reserve(static_cast<std::size_t>(std::max(M, 0)));
    while (static_cast<int>(out.size()) < M) {
        auto p = draw_operating_point(task, rng);
        const auto in = model_input(task.kind, norm, p.x, p.u);
        if (std::find(taken.begin(), taken.end(), in) != taken.end()) continue;
        out.push_back(p);
    }
    return out;
}

ShotSet draw_shot_set(const TaskSpec& task, int K, int M, const SimConfig& cfg, std::uint64_t seed) {
    if (K < 0 || M < 0) throw std::invalid_argument("shot and collocation counts must be non-negative");
    ShotSet set;
    set.shots = generate_task_dataset(task, K, cfg, derive_seed(seed, {1}));
    set.collocation = draw_collocation(task, set.shots, M, derive_seed(seed, {2}));
    return set;
}

}  // namespace rfm
