#include "rfm/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "rfm/errors.hpp"

namespace rfm {

namespace {

// Stream tags under the experiment seed.
constexpr std::uint64_t kUnseenStream = 11;
constexpr std::uint64_t kShotStream = 12;
constexpr std::uint64_t kScratchStream = 13;
constexpr std::uint64_t kEnsembleStream = 14;
constexpr std::uint64_t kResampleStream = 15;

std::uint64_t kind_id(ReactorKind k) { return static_cast<std::uint64_t>(k); }

const FoundationModel& require(const FoundationModel* m, const std::string& method) {
    if (!m) throw MissingCheckpoint("method '" + method + "' needs a checkpoint that was not provided");
    return *m;
}

double test_mse(const RnnParams& params, const UnseenTask& t) { return evaluate_mse(params, t.test); }

AdaptTarget target_for(const ExperimentConfig& cfg, const UnseenTask& t, const ShotSet& shots,
                       std::uint64_t resample_seed) {
    AdaptTarget target = make_adapt_target(t.task, cfg.sim, cfg.adapt.residual_units);
    if (cfg.adapt.resample.enabled) {
        const auto task = t.task;
        const auto taken = shots.shots;
        const int M = static_cast<int>(shots.collocation.size());
        target.redraw_collocation = [task, taken, M, resample_seed](int k) {
            return draw_collocation(task, taken, M, derive_seed(resample_seed, {static_cast<std::uint64_t>(k)}));
        };
    }
    return target;
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t w = workers > 0 ? static_cast<std::size_t>(workers) : std::thread::hardware_concurrency();
    w = std::max<std::size_t>(1, std::min(w, n));
    std::vector<std::exception_ptr> errors(n);
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < w; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

UnseenTask draw_unseen_task(ReactorKind kind, int order, int test_samples, const SimConfig& sim,
                            std::uint64_t seed) {
    auto td = draw_feasible_task(kind, order, test_samples, sim, seed);
    return {std::move(td.task), std::move(td.samples)};
}

UnseenTask unseen_task(const ExperimentConfig& cfg, ReactorKind kind, int task_id) {
    return draw_unseen_task(kind, cfg.order(kind), cfg.test_samples, cfg.sim,
                            derive_seed(cfg.seed, {kUnseenStream, kind_id(kind), static_cast<std::uint64_t>(task_id)}));
}

std::vector<UnseenTask> unseen_tasks(const ExperimentConfig& cfg, ReactorKind kind) {
    std::vector<UnseenTask> out(static_cast<std::size_t>(cfg.n_unseen_tasks));
    parallel_for(out.size(), cfg.workers,
                 [&](std::size_t t) { out[t] = unseen_task(cfg, kind, static_cast<int>(t)); });
    return out;
}

std::uint64_t shot_seed(const ExperimentConfig& cfg, ReactorKind kind, int task_id, int seed) {
    return derive_seed(cfg.seed,
                       {kShotStream, kind_id(kind), static_cast<std::uint64_t>(task_id), static_cast<std::uint64_t>(seed)});
}

std::uint64_t scratch_seed(const ExperimentConfig& cfg, int seed) {
    return derive_seed(cfg.seed, {kScratchStream, static_cast<std::uint64_t>(seed)});
}

bool method_uses_physics(const std::string& method) {
    return method == "scratch-physics" || method == "reptile-physics";
}

AdaptResult adapt_method(const std::string& method, const ExperimentConfig& cfg, const SweepModels& models,
                         const UnseenTask& task, const ShotSet& shots, std::uint64_t init_seed) {
    const bool physics = method_uses_physics(method);
    const auto acfg = cfg.adapt_config(physics ? AdaptMode::PhysicsInformed : AdaptMode::DataOnly);
    ShotSet used = shots;
    if (!physics) used.collocation.clear();
    const auto target = target_for(cfg, task, used, derive_seed(init_seed, {kResampleStream}));

    if (method == "scratch-data" || method == "scratch-physics") {
        const Architecture arch = models.reptile ? models.reptile->params.arch : Architecture{};
        return used.shots.empty() ? adapt(init_params(arch, init_seed), used, target, acfg)
                                  : train_scratch(arch, init_seed, used, target, acfg);
    }
    if (method == "transfer") return adapt(require(models.transfer, method).params, used, target, acfg);
    if (method == "reptile-data" || method == "reptile-physics") {
        return adapt(require(models.reptile, method).params, used, target, acfg);
    }
    throw std::invalid_argument("unknown method '" + method + "'");
}

double run_method(const std::string& method, const ExperimentConfig& cfg, const SweepModels& models,
                  const UnseenTask& task, const ShotSet& shots, std::uint64_t init_seed) {
    return test_mse(adapt_method(method, cfg, models, task, shots, init_seed).params, task);
}

namespace {

struct Cell {
    std::string method;
    ReactorKind kind;
    int shots;
    int collocations;
    int task_id;
    int seed;
};

SweepResult run_cells(const ExperimentConfig& cfg, const SweepModels& models, const std::vector<Cell>& cells,
                      const std::map<ReactorKind, std::vector<UnseenTask>>& tasks) {
    SweepResult r;
    r.rows.resize(cells.size());
    parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
        const auto& c = cells[i];
        const auto& task = tasks.at(c.kind)[static_cast<std::size_t>(c.task_id)];
        const auto shots = draw_shot_set(task.task, c.shots, c.collocations, cfg.sim,
                                         shot_seed(cfg, c.kind, c.task_id, c.seed));
        const double mse = run_method(c.method, cfg, models, task, shots, scratch_seed(cfg, c.seed));
        r.rows[i] = {c.method, c.kind, task.task.order, c.shots, c.collocations, c.task_id, c.seed, mse};
    });
    return r;
}

void check_models(const ExperimentConfig& cfg, const SweepModels& models, bool physics_only) {
    for (const auto& m : cfg.methods) {
        if (physics_only && !method_uses_physics(m)) continue;
        if (m == "transfer") require(models.transfer, m);
        if (m.rfind("reptile", 0) == 0) require(models.reptile, m);
    }
}

}  // namespace

SweepResult run_fewshot_sweep(const ExperimentConfig& cfg, const SweepModels& models) {
    check_models(cfg, models, false);
    std::map<ReactorKind, std::vector<UnseenTask>> tasks;
    for (auto k : cfg.kinds) tasks[k] = unseen_tasks(cfg, k);

    std::vector<Cell> cells;
    for (const auto& m : cfg.methods)
        for (auto k : cfg.kinds)
            for (int K : cfg.shot_grid)
                for (int t = 0; t < cfg.n_unseen_tasks; ++t)
                    for (int s = 0; s < cfg.n_seeds; ++s)
                        cells.push_back({m, k, K, method_uses_physics(m) ? cfg.fixed_collocations : 0, t, s});
    return run_cells(cfg, models, cells, tasks);
}

SweepResult run_collocation_sweep(const ExperimentConfig& cfg, const SweepModels& models) {
    check_models(cfg, models, true);
    std::map<ReactorKind, std::vector<UnseenTask>> tasks;
    for (auto k : cfg.kinds) tasks[k] = unseen_tasks(cfg, k);

    std::vector<Cell> cells;
    for (const auto& m : cfg.methods) {
        if (!method_uses_physics(m)) continue;
        for (auto k : cfg.kinds)
            for (int M : cfg.collocation_grid)
                for (int t = 0; t < cfg.n_unseen_tasks; ++t)
                    for (int s = 0; s < cfg.n_seeds; ++s) cells.push_back({m, k, cfg.fixed_shots, M, t, s});
    }
    if (cells.empty()) throw ConfigError("collocation sweep needs at least one physics-informed method");
    return run_cells(cfg, models, cells, tasks);
}

std::vector<AggRow> aggregate(std::span<const SweepRow> rows) {
    using Key = std::tuple<std::string, ReactorKind, int, int, int>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : rows) {
        Key k{r.method, r.kind, r.order, r.shots, r.collocations};
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh) order.push_back(k);
        it->second.push_back(r.test_mse);
    }
    std::vector<AggRow> out;
    for (const auto& k : order) {
        const auto& v = groups[k];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k),
                       static_cast<int>(v.size()), mean, sd});
    }
    return out;
}

void write_raw_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "method,kind,order,shots,collocations,task_id,seed,test_mse\n";
    char buf[256];
    for (const auto& r : rows) {
        const auto kind = to_string(r.kind);
        std::snprintf(buf, sizeof buf, "%s,%.*s,%d,%d,%d,%d,%d,%.17g\n", r.method.c_str(),
                      static_cast<int>(kind.size()), kind.data(), r.order, r.shots, r.collocations, r.task_id, r.seed,
                      r.test_mse);
        os << buf;
    }
}

void write_agg_csv(std::ostream& os, std::span<const AggRow> rows) {
    os << "method,kind,order,shots,collocations,n,mean,std\n";
    char buf[256];
    for (const auto& r : rows) {
        const auto kind = to_string(r.kind);
        std::snprintf(buf, sizeof buf, "%s,%.*s,%d,%d,%d,%d,%.17g,%.17g\n", r.method.c_str(),
                      static_cast<int>(kind.size()), kind.data(), r.order, r.shots, r.collocations, r.n, r.mean,
                      r.std);
        os << buf;
    }
}

std::vector<EnsembleTrial> run_ensemble_sweep(const ExperimentConfig& cfg, const OrderBank& bank) {
    if (bank.empty()) throw MissingCheckpoint("ensemble needs at least one bank model");
    std::vector<int> orders;
    for (const auto& [o, m] : bank) orders.push_back(o);

    std::vector<EnsembleTrial> trials;
    for (auto k : cfg.kinds)
        for (int r = 0; r < cfg.ensemble.trials; ++r)
            trials.push_back({k, r, orders[static_cast<std::size_t>(r) % orders.size()], {}, {}, 0.0});

    const auto acfg = cfg.adapt_config(AdaptMode::PhysicsInformed);
    parallel_for(trials.size(), cfg.workers, [&](std::size_t i) {
        auto& tr = trials[i];
        const auto base = derive_seed(cfg.seed, {kEnsembleStream, kind_id(tr.kind), static_cast<std::uint64_t>(tr.trial)});
        const auto task = draw_unseen_task(tr.kind, tr.true_order, cfg.test_samples, cfg.sim, derive_seed(base, {0}));
        const auto shots = draw_shot_set(task.task, cfg.fixed_shots, cfg.fixed_collocations, cfg.sim,
                                         derive_seed(base, {1}));
        const auto split = split_validation(shots);
        const auto target = target_for(cfg, task, split.train, derive_seed(base, {2}));
        const auto candidates = adapt_all(bank, split.train, target, acfg);

        std::vector<ModelIO> val;
        for (const auto& s : split.validation) val.push_back(build_model_io(task.task, s));
        tr.result = min_vote(candidates, val);
        for (const auto& c : candidates)
            tr.test_mse.push_back(c.adapted ? test_mse(c.adapted->params, task) : std::nan(""));
        tr.selected_test_mse = tr.test_mse[tr.result.selected];
    });
    return trials;
}

SweepResult ensemble_rows(std::span<const EnsembleTrial> trials, int shots, int collocations) {
    SweepResult r;
    for (const auto& t : trials) {
        r.rows.push_back({"ensemble", t.kind, t.true_order, shots, collocations, t.trial, 0, t.selected_test_mse});
        for (std::size_t i = 0; i < t.result.orders.size(); ++i) {
            r.rows.push_back({"reptile-order" + std::to_string(t.result.orders[i]), t.kind, t.true_order, shots,
                              collocations, t.trial, 0, t.test_mse[i]});
        }
    }
    return r;
}

Predictor model_predictor(const RnnParams& params, const NormSpec& norm, ReactorKind kind, int n_out) {
    return [params, norm, kind, n_out](const State& x, const ControlInput& u) {
        const std::array<ModelInput, 1> in{model_input(kind, norm, x, u)};
        const auto y = forward(params, input_batch(in, n_out));
        std::vector<State> out;
        out.reserve(y.size());
        for (const auto& m : y) out.push_back(denormalize_state(norm, {m(0, 0), m(1, 0)}));
        return out;
    };
}

Predictor simulator_predictor(const TaskSpec& task, const SimConfig& sim) {
    return [task, sim](const State& x, const ControlInput& u) { return simulate_period(task, x, u, sim).steps; };
}

RolloutResult rollout(const Predictor& model, const TaskSpec& task, const State& x0,
                      std::span<const ControlInput> inputs, const SimConfig& sim) {
    RolloutResult r;
    r.time.push_back(0.0);
    r.truth.push_back(x0);
    r.predicted.push_back(x0);
    State xt = x0, xp = x0;
    const double dt = task.timing.dt_sample / static_cast<double>(sim.n_out);
    double t = 0.0;
    for (const auto& u : inputs) {
        const auto truth = simulate_period(task, xt, u, sim).steps;
        const auto pred = model(xp, u);
        if (pred.size() != truth.size()) throw ShapeError("predictor returned the wrong number of steps");
        for (std::size_t i = 0; i < truth.size(); ++i) {
            t += dt;
            if (!std::isfinite(pred[i].T) || !std::isfinite(pred[i].CA)) {
                throw NumericalError("rollout.prediction", "non-finite predicted state");
            }
            r.time.push_back(t);
            r.truth.push_back(truth[i]);
            r.predicted.push_back(pred[i]);
        }
        xt = truth.back();
        xp = pred.back();
    }
    return r;
}

void write_rollout_csv(std::ostream& os, const RolloutResult& r) {
    os << "time,T_true,CA_true,T_pred,CA_pred\n";
    char buf[256];
    for (std::size_t i = 0; i < r.time.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.time[i], r.truth[i].T, r.truth[i].CA,
                      r.predicted[i].T, r.predicted[i].CA);
        os << buf;
    }
}

}  // namespace rfm
