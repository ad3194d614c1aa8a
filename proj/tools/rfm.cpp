#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rfm/checkpoint.hpp"
#include "rfm/config.hpp"
#include "rfm/ensemble.hpp"
#include "rfm/errors.hpp"
#include "rfm/experiment.hpp"
#include "rfm/meta.hpp"
#include "rfm/plot.hpp"
#include "rfm/rng.hpp"
#include "rfm/sim.hpp"
#include "rfm/tasks.hpp"

namespace fs = std::filesystem;
using namespace rfm;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool desk = false;
    bool paper = false;
};

ExperimentConfig resolve(const Common& c, const std::string& experiment) {
    ExperimentConfig cfg = preset(c.paper ? Scale::Paper : Scale::Desk);
    if (!c.config.empty()) cfg = load_config(c.config, cfg);
    if (!experiment.empty()) cfg.experiment = experiment;
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.paths.out = c.out;
    validate(cfg);
    fs::create_directories(cfg.paths.out);
    std::ofstream(cfg.paths.out / "config.json") << config_to_json(cfg) << '\n';
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

void write_sweep(const ExperimentConfig& cfg, const SweepResult& r) {
    auto raw = open_out(cfg.paths.out / "raw.csv");
    write_raw_csv(raw, r.rows);
    auto agg = open_out(cfg.paths.out / "agg.csv");
    write_agg_csv(agg, aggregate(r.rows));
}

// Mean +/- std per method over the swept axis, one file per kind.
void plot_sweep(const ExperimentConfig& cfg, const SweepResult& r, bool by_collocation, const std::string& stem) {
    const auto agg = aggregate(r.rows);
    for (auto kind : cfg.kinds) {
        PlotSpec spec;
        spec.title = std::string(to_string(kind)) + (by_collocation ? " collocation sweep" : " few-shot sweep");
        spec.x_label = by_collocation ? "collocation points" : "shots";
        spec.y_label = "test MSE";
        spec.log_y = true;
        std::map<std::string, std::size_t> index;
        for (const auto& a : agg) {
            if (a.kind != kind) continue;
            auto [it, fresh] = index.try_emplace(a.method, spec.series.size());
            if (fresh) spec.series.push_back({a.method, {}, {}, {}});
            auto& s = spec.series[it->second];
            s.x.push_back(by_collocation ? a.collocations : a.shots);
            s.mean.push_back(a.mean);
            s.stddev.push_back(a.std);
        }
        if (spec.series.empty()) continue;
        write_svg(cfg.paths.out / (stem + "_" + std::string(to_string(kind)) + ".svg"), spec);
    }
}

struct LoadedModels {
    std::optional<FoundationModel> reptile;
    std::optional<FoundationModel> transfer;

    SweepModels view() const { return {reptile ? &*reptile : nullptr, transfer ? &*transfer : nullptr}; }
};

LoadedModels load_models(const ExperimentConfig& cfg) {
    LoadedModels m;
    bool need_reptile = false, need_transfer = false;
    for (const auto& method : cfg.methods) {
        need_reptile = need_reptile || method.rfind("reptile", 0) == 0;
        need_transfer = need_transfer || method == "transfer";
    }
    if (need_reptile) m.reptile = load_checkpoint(cfg.foundation_path());
    if (need_transfer) m.transfer = load_checkpoint(cfg.transfer_path());
    return m;
}

int cmd_simulate(const ExperimentConfig& cfg, int n_samples) {
    for (auto kind : cfg.kinds) {
        const auto name = std::string(to_string(kind));
        const auto td = draw_feasible_task(kind, cfg.order(kind), n_samples, cfg.sim,
                                           derive_seed(cfg.seed, {static_cast<std::uint64_t>(kind)}));
        std::vector<Sample> samples = generate_task_dataset(td.task, n_samples, cfg.sim,
                                                            derive_seed(cfg.seed, {static_cast<std::uint64_t>(kind), 1}));
        auto csv = open_out(cfg.paths.out / ("dataset_" + name + ".csv"));
        write_dataset_csv(csv, td.task, samples);
        open_out(cfg.paths.out / ("task_" + name + ".json")) << task_to_json(td.task) << '\n';
        std::cout << name << ": " << samples.size() << " samples\n";
    }
    return 0;
}

FoundationModel train_one(const MetaConfig& mc, bool transfer, const fs::path& ckpt,
                          const fs::path& metrics_path) {
    const auto pool = build_task_pool(mc);
    auto metrics = open_out(metrics_path);
    write_metrics_header(metrics);
    TrainIo io{&metrics, ckpt.string() + ".abort"};
    auto model = transfer ? transfer_pretrain(mc, pool, io) : meta_train(mc, pool, io);
    save_checkpoint(model, ckpt);
    std::cout << "wrote " << ckpt.string() << '\n';
    return model;
}

int cmd_meta_train(const ExperimentConfig& cfg, bool bank) {
    if (!bank) {
        train_one(cfg.meta_config(), false, cfg.foundation_path(), cfg.paths.out / "metrics.csv");
        return 0;
    }
    for (int order : cfg.ensemble.bank_orders) {
        train_one(cfg.meta_config(order), false, cfg.bank_path(order),
                  cfg.paths.out / ("metrics_order" + std::to_string(order) + ".csv"));
    }
    return 0;
}

int cmd_transfer_train(const ExperimentConfig& cfg) {
    train_one(cfg.meta_config(), true, cfg.transfer_path(), cfg.paths.out / "metrics_transfer.csv");
    return 0;
}

void write_trace(const fs::path& p, const AdaptResult& r) {
    auto os = open_out(p);
    os << "epoch,L_d,L_CA,L_T,total\n";
    char buf[200];
    for (std::size_t e = 0; e < r.trace.size(); ++e) {
        const auto& l = r.trace[e];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", e, l.L_d, l.L_CA, l.L_T, l.total);
        os << buf;
    }
}

int cmd_adapt(ExperimentConfig cfg, const std::string& method, int task_id, int seed) {
    cfg.methods = {method};
    const auto models = load_models(cfg);
    SweepResult r;
    for (auto kind : cfg.kinds) {
        const auto name = std::string(to_string(kind));
        const auto task = unseen_task(cfg, kind, task_id);
        const auto shots = draw_shot_set(task.task, cfg.fixed_shots,
                                         method_uses_physics(method) ? cfg.fixed_collocations : 0, cfg.sim,
                                         shot_seed(cfg, kind, task_id, seed));
        const auto res = adapt_method(method, cfg, models.view(), task, shots, scratch_seed(cfg, seed));
        const double mse = evaluate_mse(res.params, task.test);
        r.rows.push_back({method, kind, cfg.order(kind), cfg.fixed_shots, static_cast<int>(shots.collocation.size()),
                          task_id, seed, mse});

        FoundationModel adapted;
        adapted.params = res.params;
        adapted.provenance = {{{kind, cfg.order(kind), 1}}, cfg.seed, "adapted-" + method};
        save_checkpoint(adapted, cfg.paths.out / ("adapted_" + name + ".ckpt"));
        write_trace(cfg.paths.out / ("trace_" + name + ".csv"), res);
        std::printf("%s %s test MSE %.6e\n", name.c_str(), method.c_str(), mse);
    }
    write_sweep(cfg, r);
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, bool collocation) {
    const auto models = load_models(cfg);
    const auto r = collocation ? run_collocation_sweep(cfg, models.view()) : run_fewshot_sweep(cfg, models.view());
    write_sweep(cfg, r);
    plot_sweep(cfg, r, collocation, collocation ? "collocation" : "fewshot");
    for (const auto& a : aggregate(r.rows)) {
        std::printf("%-16s %-5s K=%-3d M=%-4d mean %.4e std %.4e\n", a.method.c_str(),
                    std::string(to_string(a.kind)).c_str(), a.shots, a.collocations, a.mean, a.std);
    }
    return 0;
}

// Inputs whose true trajectory stays plausible when chained from x0.
std::vector<ControlInput> rollout_inputs(const TaskSpec& task, State x, int periods, const SimConfig& sim,
                                         std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ControlInput> out;
    int misses = 0;
    while (static_cast<int>(out.size()) < periods) {
        const auto u = draw_operating_point(task, rng).u;
        try {
            x = simulate_period(task, x, u, sim).steps.back();
            out.push_back(u);
            misses = 0;
        } catch (const TrajectoryRejected&) {
            if (++misses > 1000) throw TaskInfeasible("no plausible input continues the rollout");
        }
    }
    return out;
}

void plot_rollout(const fs::path& p, const RolloutResult& r, bool temperature, const std::string& kind) {
    PlotSpec spec;
    spec.title = kind + (temperature ? " temperature" : " concentration");
    spec.x_label = "time (hr)";
    spec.y_label = temperature ? "T (K)" : "CA (kmol/m3)";
    PlotSeries truth{"true", r.time, {}, {}}, pred{"predicted", r.time, {}, {}};
    for (std::size_t i = 0; i < r.time.size(); ++i) {
        truth.mean.push_back(temperature ? r.truth[i].T : r.truth[i].CA);
        pred.mean.push_back(temperature ? r.predicted[i].T : r.predicted[i].CA);
    }
    spec.series = {truth, pred};
    write_svg(p, spec);
}

int cmd_rollout(ExperimentConfig cfg, const std::string& method) {
    cfg.methods = {method};
    const auto models = load_models(cfg);
    for (auto kind : cfg.kinds) {
        const auto name = std::string(to_string(kind));
        const auto task = unseen_task(cfg, kind, 0);
        const auto shots = draw_shot_set(task.task, cfg.fixed_shots,
                                         method_uses_physics(method) ? cfg.fixed_collocations : 0, cfg.sim,
                                         shot_seed(cfg, kind, 0, 0));
        const auto res = adapt_method(method, cfg, models.view(), task, shots, scratch_seed(cfg, 0));

        Rng rng(derive_seed(cfg.seed, {16, static_cast<std::uint64_t>(kind)}));
        const State x0 = draw_operating_point(task.task, rng).x;
        const auto inputs = rollout_inputs(task.task, x0, cfg.rollout.periods, cfg.sim,
                                           derive_seed(cfg.seed, {17, static_cast<std::uint64_t>(kind)}));
        const auto pred = model_predictor(res.params, norm_spec(task.task.op_ranges), kind, cfg.sim.n_out);
        const auto r = rollout(pred, task.task, x0, inputs, cfg.sim);

        auto csv = open_out(cfg.paths.out / ("rollout_" + name + ".csv"));
        write_rollout_csv(csv, r);
        plot_rollout(cfg.paths.out / ("rollout_" + name + "_T.svg"), r, true, name);
        plot_rollout(cfg.paths.out / ("rollout_" + name + "_CA.svg"), r, false, name);
        std::cout << name << ": " << r.time.size() << " points\n";
    }
    return 0;
}

int cmd_ensemble(const ExperimentConfig& cfg) {
    OrderBank bank;
    for (int order : cfg.ensemble.bank_orders) bank.emplace(order, load_checkpoint(cfg.bank_path(order)));
    const auto trials = run_ensemble_sweep(cfg, bank);
    for (const auto& t : trials) {
        const auto stem = "ensemble_" + std::string(to_string(t.kind)) + "_trial" + std::to_string(t.trial);
        FoundationModel selected;
        selected.params = t.result.selected_params;
        selected.provenance = {{{t.kind, t.result.selected_order, 1}}, cfg.seed, "ensemble"};
        save_checkpoint(selected, cfg.paths.out / (stem + ".ckpt"));
        open_out(cfg.paths.out / (stem + ".json")) << ensemble_to_json(t.result, t.true_order) << '\n';
        std::printf("%s true order %d selected %d test MSE %.4e\n", stem.c_str(), t.true_order,
                    t.result.selected_order, t.selected_test_mse);
    }
    const auto split = split_validation(ShotSet{std::vector<Sample>(static_cast<std::size_t>(cfg.fixed_shots)), {}});
    write_sweep(cfg, ensemble_rows(trials, static_cast<int>(split.train.shots.size()), cfg.fixed_collocations));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot reactor modeling with meta-learned recurrent networks"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Experiment seed");
        sub->add_option("--out", common.out, "Output directory");
        auto* d = sub->add_flag("--desk-scale", common.desk, "Desk-scale preset (default)");
        auto* p = sub->add_flag("--paper-scale", common.paper, "Paper-scale preset");
        d->excludes(p);
    };

    int n_samples = 200;
    auto* simulate = app.add_subcommand("simulate", "Simulate a task per kind and write its dataset");
    add_common(simulate);
    simulate->add_option("--samples", n_samples, "Samples per task")->check(CLI::PositiveNumber);

    bool bank = false;
    auto* meta = app.add_subcommand("meta-train", "Reptile meta-training of the foundation model");
    add_common(meta);
    meta->add_flag("--bank", bank, "Train one model per bank order instead");

    auto* transfer = app.add_subcommand("transfer-train", "Pooled pretraining baseline");
    add_common(transfer);

    std::string method = "reptile-physics";
    int task_id = 0, seed_id = 0;
    const std::vector<std::string> methods{"scratch-data", "transfer", "reptile-data", "scratch-physics",
                                           "reptile-physics"};
    auto* adapt_cmd = app.add_subcommand("adapt", "Adapt one method to an unseen task");
    add_common(adapt_cmd);
    adapt_cmd->add_option("--method", method, "Adaptation method")->check(CLI::IsMember(methods));
    adapt_cmd->add_option("--task", task_id, "Unseen task index")->check(CLI::NonNegativeNumber);
    adapt_cmd->add_option("--trial", seed_id, "Shot-set seed index")->check(CLI::NonNegativeNumber);

    auto* shots = app.add_subcommand("sweep-shots", "Few-shot sweep over the shot grid");
    add_common(shots);
    auto* colloc = app.add_subcommand("sweep-collocation", "Sweep over the collocation grid at fixed shots");
    add_common(colloc);

    auto* roll = app.add_subcommand("rollout", "Closed-loop rollout of an adapted model");
    add_common(roll);
    roll->add_option("--method", method, "Adaptation method")->check(CLI::IsMember(methods));

    auto* ens = app.add_subcommand("ensemble", "Order-bank adaptation with min-voting");
    add_common(ens);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage problems share the config-error exit code
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(resolve(common, ""), n_samples);
        if (meta->parsed()) return cmd_meta_train(resolve(common, "meta_train"), bank);
        if (transfer->parsed()) return cmd_transfer_train(resolve(common, "transfer_train"));
        if (adapt_cmd->parsed()) return cmd_adapt(resolve(common, ""), method, task_id, seed_id);
        if (shots->parsed()) return cmd_sweep(resolve(common, "fewshot_sweep"), false);
        if (colloc->parsed()) return cmd_sweep(resolve(common, "collocation_sweep"), true);
        if (roll->parsed()) return cmd_rollout(resolve(common, "rollout"), method);
        if (ens->parsed()) return cmd_ensemble(resolve(common, "ensemble_sweep"));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MissingCheckpoint& e) {
        std::cerr << "missing checkpoint: " << e.what() << " (run meta-train / transfer-train first)\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
