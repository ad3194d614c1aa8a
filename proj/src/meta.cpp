#include "rfm/meta.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rfm/errors.hpp"

namespace rfm {

namespace {

// Stream tags under the meta seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kVisitStream = 2;
constexpr std::uint64_t kInnerStream = 3;
constexpr std::uint64_t kPooledStream = 4;
constexpr std::uint64_t kPoolStream = 5;

constexpr int kMaxTaskRedraws = 1000;

using EpochCallback = std::function<void(int epoch, const RnnParams&)>;

void add_into(Gradients& acc, const Gradients& g) {
    for_each_tensor([](auto& a, const auto& b) { a += b; }, acc, g);
}

void train_epochs(RnnParams& params, std::span<const ModelIO> data, int epochs, int batch_size, AdamState& adam,
                  std::uint64_t seed, const EpochCallback& on_epoch = {}) {
    if (data.empty()) throw std::invalid_argument("training data is empty");
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    std::vector<std::size_t> order(data.size());
    std::vector<ModelIO> batch;
    for (int e = 0; e < epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(e)}));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
            const auto X = input_batch(batch);
            const auto Y = target_batch(batch);
            ForwardCache cache;
            const auto pred = forward(params, X, &cache);
            const auto dl = data_loss(pred, Y);
            adam_update(params, backward(params, cache, dl.grad), adam);
        }
        if (on_epoch) on_epoch(e, params);
    }
}

std::vector<ModelInput> collocation_inputs(const AdaptTarget& target, std::span<const OperatingPoint> pts) {
    std::vector<ModelInput> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(model_input(target.kind, target.norm, p.x, p.u));
    return out;
}

std::string kind_label(std::span<const TaskData> pool) {
    if (pool.empty()) return "none";
    for (const auto& t : pool)
        if (t.task.kind != pool.front().task.kind) return "pooled";
    return std::string(to_string(pool.front().task.kind));
}

std::vector<TaskFamily> families_of(std::span<const TaskData> pool) {
    std::vector<TaskFamily> out;
    for (const auto& t : pool) {
        auto it = std::find_if(out.begin(), out.end(), [&](const TaskFamily& f) {
            return f.kind == t.task.kind && f.order == t.task.order;
        });
        if (it == out.end()) {
            out.push_back({t.task.kind, t.task.order, 1});
        } else {
            ++it->count;
        }
    }
    return out;
}

}  // namespace

int MetaConfig::n_tasks() const {
    int n = 0;
    for (const auto& f : families) n += f.count;
    return n;
}

TaskData draw_feasible_task(ReactorKind kind, int order, int n_samples, const SimConfig& sim, std::uint64_t seed) {
    for (int a = 0; a < kMaxTaskRedraws; ++a) {
        const auto attempt = static_cast<std::uint64_t>(a);
        TaskData td{sample_task(kind, order, derive_seed(seed, {attempt, 0})), {}};
        try {
            const auto samples = generate_task_dataset(td.task, n_samples, sim, derive_seed(seed, {attempt, 1}));
            td.samples.reserve(samples.size());
            for (const auto& s : samples) td.samples.push_back(build_model_io(td.task, s));
            return td;
        } catch (const TaskInfeasible&) {
        }
    }
    throw TaskInfeasible("no feasible " + std::string(to_string(kind)) + " task after " +
                         std::to_string(kMaxTaskRedraws) + " parameter draws");
}

std::vector<TaskData> build_task_pool(const MetaConfig& cfg) {
    std::vector<TaskData> pool;
    pool.reserve(static_cast<std::size_t>(std::max(cfg.n_tasks(), 0)));
    for (std::size_t f = 0; f < cfg.families.size(); ++f) {
        const auto& fam = cfg.families[f];
        for (int j = 0; j < fam.count; ++j) {
            pool.push_back(draw_feasible_task(fam.kind, fam.order, cfg.samples_per_task, cfg.sim,
                                              derive_seed(cfg.seed, {kPoolStream, f, static_cast<std::uint64_t>(j)})));
        }
    }
    return pool;
}

double evaluate_mse(const RnnParams& params, std::span<const ModelIO> samples) {
    if (samples.empty()) throw std::invalid_argument("cannot evaluate on an empty sample set");
    return data_loss(forward(params, input_batch(samples)), target_batch(samples)).value;
}

RnnParams inner_train(const RnnParams& params, std::span<const ModelIO> data, int epochs, int batch_size,
                      const AdamConfig& adam, std::uint64_t seed) {
    RnnParams W = params;
    if (epochs <= 0) return W;
    auto state = make_adam(W, adam);
    train_epochs(W, data, epochs, batch_size, state, seed);
    return W;
}

double reptile_alpha(double epsilon, int iteration, int n_tasks) {
    if (n_tasks < 1) throw std::invalid_argument("n_tasks must be >= 1");
    return epsilon * (1.0 - static_cast<double>(iteration) / static_cast<double>(n_tasks));
}

RnnParams reptile_step(const RnnParams& theta, const RnnParams& W, double alpha) {
    if (!(theta.arch == W.arch)) throw ShapeError("Reptile update between different architectures");
    if (!(alpha >= 0.0)) throw std::invalid_argument("Reptile step size must be non-negative");
    const Eigen::VectorXd t = flatten(theta);
    const Eigen::VectorXd w = flatten(W);
    return unflatten(t + alpha * (w - t), theta.arch);
}

void write_metrics_header(std::ostream& os) { os << "iteration,task_kind,order,L_d,L_CA,L_T,total\n"; }

void write_metrics_row(std::ostream& os, const MetricsRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.17g,%.17g,%.17g,%.17g\n", row.iteration, row.kind.c_str(), row.order,
                  row.loss.L_d, row.loss.L_CA, row.loss.L_T, row.loss.total);
    os << buf;
}

FoundationModel meta_train(const MetaConfig& cfg, std::span<const TaskData> pool, const TrainIo& io) {
    if (pool.empty()) throw std::invalid_argument("meta-training needs at least one task");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("meta step size must be positive");

    FoundationModel model;
    model.params = init_params(cfg.arch, derive_seed(cfg.seed, {kInitStream}));
    model.provenance = {families_of(pool), cfg.seed, "reptile"};

    const int n = static_cast<int>(pool.size());
    std::vector<std::size_t> visit(pool.size());
    std::iota(visit.begin(), visit.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, {kVisitStream}));
    std::shuffle(visit.begin(), visit.end(), rng);

    if (io.metrics) write_metrics_header(*io.metrics);
    for (int it = 1; it <= n; ++it) {
        const auto& td = pool[visit[static_cast<std::size_t>(it - 1)]];
        try {
            const auto W = inner_train(model.params, td.samples, cfg.n_epochs, cfg.batch_size, cfg.adam,
                                       derive_seed(cfg.seed, {kInnerStream, static_cast<std::uint64_t>(it)}));
            if (io.metrics) {
                const double L_d = evaluate_mse(W, td.samples);
                write_metrics_row(*io.metrics, {it, std::string(to_string(td.task.kind)), td.task.order,
                                                {L_d, 0.0, 0.0, L_d}});
            }
            model.params = reptile_step(model.params, W, reptile_alpha(cfg.epsilon, it, n));
        } catch (const NumericalError&) {
            if (io.abort_checkpoint) save_checkpoint(model, *io.abort_checkpoint);
            throw;
        }
    }
    return model;
}

FoundationModel transfer_pretrain(const MetaConfig& cfg, std::span<const TaskData> pool, const TrainIo& io) {
    if (pool.empty()) throw std::invalid_argument("transfer pretraining needs at least one task");
    FoundationModel model;
    model.params = init_params(cfg.arch, derive_seed(cfg.seed, {kInitStream}));
    model.provenance = {families_of(pool), cfg.seed, "transfer"};

    std::vector<ModelIO> pooled;
    for (const auto& td : pool) pooled.insert(pooled.end(), td.samples.begin(), td.samples.end());

    const std::string label = kind_label(pool);
    const int order = model.order();
    EpochCallback on_epoch;
    if (io.metrics) {
        write_metrics_header(*io.metrics);
        on_epoch = [&](int e, const RnnParams& p) {
            const double L_d = evaluate_mse(p, pooled);
            write_metrics_row(*io.metrics, {e + 1, label, order, {L_d, 0.0, 0.0, L_d}});
        };
    }
    if (cfg.n_epochs > 0) {
        auto state = make_adam(model.params, cfg.adam);
        try {
            train_epochs(model.params, pooled, cfg.n_epochs, cfg.batch_size, state,
                         derive_seed(cfg.seed, {kPooledStream}), on_epoch);
        } catch (const NumericalError&) {
            if (io.abort_checkpoint) save_checkpoint(model, *io.abort_checkpoint);
            throw;
        }
    }
    return model;
}

bool ResampleHook::should_resample(std::span<const LossBreakdown> trace, int last_resample_epoch) const {
    if (!enabled || patience < 1) return false;
    const int n = static_cast<int>(trace.size());
    if (n <= patience) return false;
    if (last_resample_epoch >= 0 && (n - 1) - last_resample_epoch < patience) return false;
    const double before = trace[static_cast<std::size_t>(n - 1 - patience)].total;
    const double now = trace.back().total;
    return now > before * (1.0 - rel_tol);
}

AdaptTarget make_adapt_target(const TaskSpec& task, const SimConfig& sim, ResidualUnits units) {
    AdaptTarget t;
    t.kind = task.kind;
    t.norm = norm_spec(task.op_ranges);
    t.est = make_estimated_params(task);
    t.scale = residual_scale(units, t.norm);
    t.n_out = sim.n_out;
    t.dt = task.timing.dt_sample / static_cast<double>(sim.n_out);
    return t;
}

AdaptResult adapt(const RnnParams& start, const ShotSet& shots, const AdaptTarget& target, const AdaptConfig& cfg) {
    AdaptResult res{start, {}, 0};
    const bool physics = cfg.mode == AdaptMode::PhysicsInformed && (cfg.weights.g2 != 0.0 || cfg.weights.g3 != 0.0);
    std::vector<OperatingPoint> colloc = shots.collocation;
    const bool use_colloc = physics && !colloc.empty();
    const bool use_data = !shots.shots.empty();
    if (!use_data && !use_colloc) return res;

    std::vector<ModelIO> ios;
    ios.reserve(shots.shots.size());
    for (const auto& s : shots.shots) ios.push_back(build_model_io(target.kind, target.norm, s));
    const Sequence X = input_batch(ios);
    const Sequence Y = target_batch(ios);
    Sequence Xc = use_colloc ? input_batch(collocation_inputs(target, colloc), target.n_out) : Sequence{};

    auto& params = res.params;
    auto adam = make_adam(params, cfg.adam);
    const auto& w = cfg.weights;
    int last_resample = -1;
    res.trace.reserve(static_cast<std::size_t>(std::max(cfg.epochs, 0)));

    for (int e = 0; e < cfg.epochs; ++e) {
        Gradients g = zeros_like(params);
        double L_d = 0.0, L_CA = 0.0, L_T = 0.0;
        if (use_data) {
            ForwardCache cache;
            const auto pred = forward(params, X, &cache);
            auto dl = data_loss(pred, Y);
            L_d = dl.value;
            for (auto& m : dl.grad) m *= w.g1;
            add_into(g, backward(params, cache, dl.grad));
        }
        if (use_colloc) {
            ForwardCache cache;
            const auto pred = forward(params, Xc, &cache);
            const auto ph = physics_residuals(target.est, pred, colloc, target.norm, target.dt, target.scale);
            L_CA = ph.L_CA;
            L_T = ph.L_T;
            Sequence og(pred.size());
            for (std::size_t t = 0; t < pred.size(); ++t) og[t] = w.g2 * ph.grad_CA[t] + w.g3 * ph.grad_T[t];
            add_into(g, backward(params, cache, og));
        }
        res.trace.push_back(total_loss(w, L_d, L_CA, L_T));
        adam_update(params, g, adam);

        if (use_colloc && target.redraw_collocation && cfg.resample.should_resample(res.trace, last_resample)) {
            colloc = target.redraw_collocation(res.resamples);
            Xc = input_batch(collocation_inputs(target, colloc), target.n_out);
            last_resample = e;
            ++res.resamples;
        }
    }
    if (!all_finite(params)) throw NumericalError("adapt.params", "non-finite parameters after adaptation");
    return res;
}

AdaptResult train_scratch(const Architecture& arch, std::uint64_t init_seed, const ShotSet& shots,
                          const AdaptTarget& target, const AdaptConfig& cfg) {
    if (shots.shots.empty()) throw std::invalid_argument("scratch training needs at least one shot");
    return adapt(init_params(arch, init_seed), shots, target, cfg);
}

}  // namespace rfm
