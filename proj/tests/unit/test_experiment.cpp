#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfm/errors.hpp"
#include "rfm/experiment.hpp"

using namespace rfm;

namespace {

const Architecture kSmall{4, {6}, 2};

ExperimentConfig tiny() {
    auto c = preset(Scale::Desk);
    c.seed = 5;
    c.shot_grid = {0, 2};
    c.collocation_grid = {0, 4};
    c.fixed_shots = 2;
    c.fixed_collocations = 4;
    c.n_unseen_tasks = 1;
    c.n_seeds = 2;
    c.test_samples = 8;
    c.workers = 1;
    c.adapt.epochs = 2;
    c.ensemble.trials = 2;
    return c;
}

FoundationModel model_of(std::uint64_t seed, const std::string& method, int order = 2) {
    FoundationModel m;
    m.params = init_params(kSmall, seed);
    m.provenance = {{{ReactorKind::Cstr, order, 1}}, seed, method};
    return m;
}

// Welford's running mean and variance, independent of the two-pass form.
std::pair<double, double> welford(const std::vector<double>& v) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v[i] - mean);
    }
    return {mean, v.size() > 1 ? std::sqrt(m2 / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

TEST_CASE("parallel_for") {
    for (int workers : {1, 3}) {
        std::vector<std::atomic<int>> hits(50);
        parallel_for(50, workers, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h.load() == 1);

        // the lowest failing index wins, whatever finished first
        try {
            parallel_for(20, workers, [](std::size_t i) {
                if (i == 17 || i == 6) throw std::runtime_error("job " + std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "job 6");
        }
    }
    CHECK_NOTHROW(parallel_for(0, 2, [](std::size_t) { throw 1; }));
}

TEST_CASE("aggregation is recomputable from raw rows") {
    std::vector<SweepRow> rows;
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> d(-6.0, 1.5);
    for (const char* m : {"a", "b"})
        for (int K : {1, 5})
            for (int t = 0; t < 3; ++t)
                for (int s = 0; s < 4; ++s) rows.push_back({m, ReactorKind::Batch, 1, K, 10, t, s, d(rng)});
    rows.push_back({"c", ReactorKind::Pfr, 1, 3, 0, 0, 0, 0.25});

    const auto agg = aggregate(rows);
    REQUIRE(agg.size() == 5);
    CHECK(agg.front().method == "a");
    CHECK(agg.back().n == 1);
    CHECK(agg.back().std == 0.0);
    for (const auto& a : agg) {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.method == a.method && r.shots == a.shots && r.kind == a.kind) v.push_back(r.test_mse);
        const auto [mean, sd] = welford(v);
        CHECK(a.n == static_cast<int>(v.size()));
        CHECK(std::abs(a.mean - mean) <= 1e-12 * std::abs(mean));
        CHECK(std::abs(a.std - sd) <= 1e-12 * std::max(sd, 1e-300));
    }

    std::ostringstream raw;
    write_raw_csv(raw, rows);
    std::istringstream in(raw.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,kind,order,shots,collocations,task_id,seed,test_mse");
    std::getline(in, line);
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) == rows.front().test_mse);
    CHECK(line.rfind("a,batch,1,1,10,0,0,", 0) == 0);

    std::ostringstream ag;
    write_agg_csv(ag, agg);
    CHECK(ag.str().rfind("method,kind,order,shots,collocations,n,mean,std\n", 0) == 0);
}

TEST_CASE("few-shot sweep bookkeeping") {
    const auto cfg = tiny();
    const auto reptile = model_of(1, "reptile");
    const auto transfer = model_of(2, "transfer");
    const SweepModels models{&reptile, &transfer};

    const auto r = run_fewshot_sweep(cfg, models);
    CHECK(r.rows.size() == cfg.methods.size() * cfg.shot_grid.size() * 1 * 2);
    for (const auto& row : r.rows) {
        CHECK(row.test_mse >= 0.0);
        CHECK(std::isfinite(row.test_mse));
        CHECK(row.order == 2);
        CHECK(row.collocations == (method_uses_physics(row.method) ? 4 : 0));
    }

    const auto again = run_fewshot_sweep(cfg, models);
    std::ostringstream a, b;
    write_raw_csv(a, r.rows);
    write_raw_csv(b, again.rows);
    CHECK(a.str() == b.str());

    // zero shots with data-only adaptation leaves the foundation model as it is
    const auto task = unseen_task(cfg, ReactorKind::Cstr, 0);
    const double base = evaluate_mse(reptile.params, task.test);
    for (const auto& row : r.rows)
        if (row.method == "reptile-data" && row.shots == 0) CHECK(row.test_mse == base);

    // each row is one isolated run_method call on the shared shot set
    for (const auto& row : r.rows) {
        const auto shots = draw_shot_set(task.task, row.shots, row.collocations, cfg.sim,
                                         shot_seed(cfg, ReactorKind::Cstr, 0, row.seed));
        CHECK(run_method(row.method, cfg, models, task, shots, scratch_seed(cfg, row.seed)) == row.test_mse);
    }

    CHECK_THROWS_AS(run_fewshot_sweep(cfg, {&reptile, nullptr}), MissingCheckpoint);
    auto no_transfer = cfg;
    no_transfer.methods = {"reptile-data"};
    CHECK_NOTHROW(run_fewshot_sweep(no_transfer, {&reptile, nullptr}));
}

TEST_CASE("collocation sweep") {
    auto cfg = tiny();
    const auto reptile = model_of(1, "reptile");
    const SweepModels models{&reptile, nullptr};
    const auto r = run_collocation_sweep(cfg, models);
    CHECK(r.rows.size() == 2 * cfg.collocation_grid.size() * 2);
    for (const auto& row : r.rows) CHECK(method_uses_physics(row.method));

    // with no collocation points physics adaptation is data-only adaptation
    const auto task = unseen_task(cfg, ReactorKind::Cstr, 0);
    const auto shots = draw_shot_set(task.task, 2, 0, cfg.sim, shot_seed(cfg, ReactorKind::Cstr, 0, 0));
    CHECK(run_method("reptile-physics", cfg, models, task, shots, 1) ==
          run_method("reptile-data", cfg, models, task, shots, 1));

    cfg.methods = {"reptile-data"};
    CHECK_THROWS_AS(run_collocation_sweep(cfg, models), ConfigError);
}

TEST_CASE("rollout") {
    SimConfig sim;
    const auto td = draw_feasible_task(ReactorKind::Cstr, 2, 3, sim, 9);
    const auto& task = td.task;
    Rng rng(4);
    const auto op = draw_operating_point(task, rng);
    const auto x0 = simulate_period(task, op.x, op.u, sim).x0;
    const std::vector<ControlInput> u{op.u, op.u, op.u};

    SUBCASE("a perfect oracle reproduces the truth") {
        const auto r = rollout(simulator_predictor(task, sim), task, x0, u, sim);
        CHECK(r.time.size() == 1 + 3 * 10);
        for (std::size_t i = 0; i < r.time.size(); ++i) {
            CHECK(r.truth[i].T == r.predicted[i].T);
            CHECK(r.truth[i].CA == r.predicted[i].CA);
        }
        CHECK(r.time.back() == doctest::Approx(3 * task.timing.dt_sample).epsilon(1e-12));
        std::ostringstream os;
        write_rollout_csv(os, r);
        const auto text = os.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 32);
    }

    SUBCASE("one period is a single simulation") {
        const std::vector<ControlInput> one{op.u};
        const auto r = rollout(simulator_predictor(task, sim), task, x0, one, sim);
        const auto s = simulate_period(task, x0, op.u, sim);
        REQUIRE(r.truth.size() == 11);
        for (std::size_t i = 0; i < 10; ++i) CHECK(r.truth[i + 1].T == s.steps[i].T);
    }

    SUBCASE("model predictor") {
        const auto norm = norm_spec(task.op_ranges);
        const auto p = model_predictor(init_params(kSmall, 3), norm, task.kind, 10);
        const auto out = p(x0, op.u);
        CHECK(out.size() == 10);
        const auto r = rollout(p, task, x0, u, sim);
        CHECK(r.predicted[10].T == out.back().T);
        const Predictor short_model = [](const State& x, const ControlInput&) { return std::vector<State>(3, x); };
        CHECK_THROWS_AS(rollout(short_model, task, x0, u, sim), ShapeError);
    }
}

TEST_CASE("ensemble sweep bookkeeping") {
    auto cfg = tiny();
    cfg.fixed_shots = 5;
    OrderBank bank{{1, model_of(1, "reptile", 1)}, {2, model_of(2, "reptile", 2)}};
    const auto trials = run_ensemble_sweep(cfg, bank);
    REQUIRE(trials.size() == 2);
    CHECK(trials[0].true_order == 1);
    CHECK(trials[1].true_order == 2);
    for (const auto& t : trials) {
        CHECK(t.result.orders == std::vector<int>{1, 2});
        CHECK(t.selected_test_mse == t.test_mse[t.result.selected]);
    }
    const auto rows = ensemble_rows(trials, 5, 4);
    CHECK(rows.rows.size() == 2 * 3);
    CHECK(rows.rows[0].method == "ensemble");
    CHECK(rows.rows[2].method == "reptile-order2");
    CHECK_THROWS_AS(run_ensemble_sweep(cfg, {}), MissingCheckpoint);
}
