#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "rfm/errors.hpp"
#include "rfm/sim.hpp"

using namespace rfm;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

}  // namespace

TEST_CASE("euler step") {
    const auto x = euler_step(State{1.0, 1.0}, State{2.0, 2.0}, 0.1);
    CHECK(x.T == doctest::Approx(1.2));
    CHECK(x.CA == doctest::Approx(1.2));

    const auto same = euler_step(State{3.0, 4.0}, State{7.0, -1.0}, 0.0);
    CHECK(same.T == 3.0);
    CHECK(same.CA == 4.0);

    const auto task = fixture::mid_task(ReactorKind::Cstr, 2);
    const State x0{420.0, 2.5};
    const ControlInput u{1.0e5, 0.5, 0.0};
    const double h = 1.0e-4;
    const auto p = task.cstr();
    const double CA0 = p.CA0s + u.dCA0;
    const double r = p.k0 * std::exp(-p.Ea / (p.R * x0.T)) * x0.CA * x0.CA;
    const double CA1 = x0.CA + h * (p.F / p.V * (CA0 - x0.CA) - r);
    const double T1 = x0.T + h * (p.F / p.V * (p.T0 - x0.T) - p.dH / (p.rhoL * p.Cp) * r +
                                  (p.Qs + u.dQ) / (p.rhoL * p.Cp * p.V));
    const auto step = euler_step(task, x0, u, h);
    CHECK(step.CA == doctest::Approx(CA1).epsilon(1e-13));
    CHECK(step.T == doctest::Approx(T1).epsilon(1e-13));
}

TEST_CASE("pfr euler step holds the inlet") {
    const auto task = fixture::mid_task(ReactorKind::Pfr, 1);
    std::vector<State> prof;
    for (int k = 0; k < task.pfr().N; ++k) prof.push_back({350.0 + 5.0 * k, 2.0 - 0.1 * k});
    const auto next = euler_step(task, prof, {0.0, 0.0, 150.0}, 0.01);
    CHECK(next[0].T == prof[0].T);
    CHECK(next[0].CA == prof[0].CA);
    CHECK(next[1].T != prof[1].T);
}

TEST_CASE("simulate_period") {
    SimConfig cfg;

    SUBCASE("athermal batch without heating holds its temperature") {
        auto p = fixture::mid_br();
        p.dH = 0.0;
        const auto task = fixture::task_with(ReactorKind::Batch, 1, p);
        const auto tr = simulate_period(task, {430.0, 2.0}, {}, cfg);
        REQUIRE(tr.steps.size() == 10);
        for (const auto& s : tr.steps) CHECK(s.T == 430.0);
    }

    SUBCASE("cstr fed at its own concentration without reaction keeps CA constant") {
        auto p = fixture::mid_cstr();
        p.k0 = 0.0;
        const auto task = fixture::task_with(ReactorKind::Cstr, 2, p);
        const double CA = p.CA0s + 0.5;
        const auto tr = simulate_period(task, {350.0, CA}, {0.0, 0.5, 0.0}, cfg);
        for (const auto& s : tr.steps) CHECK(s.CA == doctest::Approx(CA).epsilon(1e-14));
    }

    SUBCASE("recorded states are evenly thinned substeps") {
        const auto task = fixture::mid_task(ReactorKind::Cstr, 2);
        const State x0{380.0, 1.5};
        const ControlInput u{-1.0e5, 0.3, 0.0};
        const auto tr = simulate_period(task, x0, u, cfg);
        State x = x0;
        const int stride = task.timing.substeps() / cfg.n_out;
        for (int s = 1; s <= task.timing.substeps(); ++s) {
            x = euler_step(task, x, u, task.timing.dt_int);
            if (s % stride == 0) {
                CHECK(tr.steps[static_cast<std::size_t>(s / stride - 1)].T == x.T);
                CHECK(tr.steps[static_cast<std::size_t>(s / stride - 1)].CA == x.CA);
            }
        }
    }

    SUBCASE("plug flow records node 1") {
        const auto task = fixture::mid_task(ReactorKind::Pfr, 1);
        const State x0{400.0, 1.5};
        const ControlInput u{0.0, 0.0, 200.0};
        const auto tr = simulate_period(task, x0, u, cfg);
        std::vector<State> prof(static_cast<std::size_t>(task.pfr().N), x0);
        for (int s = 0; s < task.timing.substeps(); ++s) prof = euler_step(task, prof, u, task.timing.dt_int);
        CHECK(tr.steps.back().T == prof[1].T);
        CHECK(tr.steps.back().CA == prof[1].CA);
    }

    SUBCASE("n_out must divide the substeps") {
        const auto task = fixture::mid_task(ReactorKind::Cstr, 2);
        CHECK_THROWS_AS(simulate_period(task, {400.0, 1.0}, {}, cfg, 1.0e-4, 7), std::invalid_argument);
    }

    SUBCASE("runaway heating is rejected") {
        auto p = fixture::mid_br();
        p.dH = -1.0e8;
        const auto task = fixture::task_with(ReactorKind::Batch, 1, p);
        CHECK_THROWS_AS(simulate_period(task, {550.0, 5.0}, {}, cfg), TrajectoryRejected);
    }
}

// Error against a 100x refined run; a 10x refinement must cut it at least
// fivefold unless it is already negligible.
TEST_CASE("accepted trajectories converge under step refinement") {
    SimConfig cfg;
    for (auto kind : {ReactorKind::Cstr, ReactorKind::Batch, ReactorKind::Pfr}) {
        const auto task = fixture::mid_task(kind, kind == ReactorKind::Cstr ? 2 : 1);
        const double h = task.timing.dt_int;
        for (const auto& s : generate_task_dataset(task, 20, cfg, 77)) {
            const auto fine = simulate_period(task, s.x0, s.u, cfg, h / 10.0, cfg.n_out);
            const auto ref = simulate_period(task, s.x0, s.u, cfg, h / 100.0, cfg.n_out);
            double e_coarse = 0.0, e_fine = 0.0;
            for (std::size_t i = 0; i < s.steps.size(); ++i) {
                e_coarse = std::max({e_coarse, rel(s.steps[i].T, ref.steps[i].T),
                                     std::abs(s.steps[i].CA - ref.steps[i].CA)});
                e_fine = std::max({e_fine, rel(fine.steps[i].T, ref.steps[i].T),
                                   std::abs(fine.steps[i].CA - ref.steps[i].CA)});
            }
            INFO(to_string(kind), " T0=", s.x0.T, " CA0=", s.x0.CA);
            if (e_coarse > 1e-5) CHECK(e_coarse >= 5.0 * e_fine);
        }
    }
}

TEST_CASE("explicit Euler converges at first order") {
    const auto task = fixture::mid_task(ReactorKind::Cstr, 2);
    SimConfig cfg;
    const State x0{360.0, 3.0};
    const ControlInput u{5.0e4, 1.0, 0.0};
    const double h0 = task.timing.dt_int;
    const auto ref = simulate_period(task, x0, u, cfg, h0 / 64.0, 10).steps.back();
    std::vector<double> lh, le;
    for (int j = 0; j < 4; ++j) {
        const double h = h0 / std::pow(2.0, j);
        const auto x = simulate_period(task, x0, u, cfg, h, 10).steps.back();
        lh.push_back(std::log(h));
        le.push_back(std::log(std::abs(x.T - ref.T)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
        mx += lh[i] / 4.0;
        my += le[i] / 4.0;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
        sxy += (lh[i] - mx) * (le[i] - my);
        sxx += (lh[i] - mx) * (lh[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("batch concentration never increases") {
    // at every recorded state of every accepted trajectory
    SimConfig cfg;
    const auto task = fixture::mid_task(ReactorKind::Batch, 1);
    for (const auto& s : generate_task_dataset(task, 30, cfg, 5)) {
        double prev = s.x0.CA;
        for (const auto& x : s.steps) {
            CHECK(x.CA <= prev);
            prev = x.CA;
        }
    }
}

TEST_CASE("plausibility filter") {
    const auto task = fixture::mid_task(ReactorKind::Cstr, 2);
    const PlausibilityLimits lim;
    Trajectory ok{{400.0, 2.0}, {}, std::vector<State>(10, State{410.0, 1.9})};
    CHECK(plausibility_filter(ok, task, lim).accepted());

    auto nan = ok;
    nan.steps[4].CA = std::numeric_limits<double>::quiet_NaN();
    CHECK(plausibility_filter(nan, task, lim).reason == RejectReason::NonFinite);

    auto inf = ok;
    inf.steps[2].T = std::numeric_limits<double>::infinity();
    CHECK(plausibility_filter(inf, task, lim).reason == RejectReason::NonFinite);

    auto neg = ok;
    neg.steps[9].CA = -1e-9;
    CHECK(plausibility_filter(neg, task, lim).reason == RejectReason::NegativeConcentration);

    auto hot = ok;
    hot.steps[3].T = 5.0e4;
    CHECK(plausibility_filter(hot, task, lim).reason == RejectReason::TemperatureOutOfBounds);

    auto cold = ok;
    cold.steps[0].T = 0.0;
    CHECK(plausibility_filter(cold, task, lim).reason == RejectReason::TemperatureOutOfBounds);

    auto huge = ok;
    huge.steps[1].CA = 2.0e6;
    CHECK(plausibility_filter(huge, task, lim).reason == RejectReason::Magnitude);

    // exp(-5e4/(8.314*150)) ~ 4e-18 with plenty of reactant left
    auto frozen = ok;
    frozen.steps[5] = {150.0, 1.0};
    CHECK(plausibility_filter(frozen, task, lim).reason == RejectReason::RateUnderflow);
    frozen.steps[5].CA = 0.0;
    CHECK(plausibility_filter(frozen, task, lim).accepted());
}

TEST_CASE("an exaggerated reaction enthalpy drives T out of bounds") {
    auto p = fixture::mid_br();
    p.k0 = 1.0e3;
    p.dH = -4.0e6;
    const auto task = fixture::task_with(ReactorKind::Batch, 1, p);
    SimConfig cfg;
    cfg.limits.T_max = 1.0e9;
    const auto tr = simulate_period(task, {560.0, 5.5}, {}, cfg);
    CHECK(tr.steps.back().T > 5.0e4);
    CHECK(plausibility_filter(tr, task, PlausibilityLimits{}).reason == RejectReason::TemperatureOutOfBounds);
}

TEST_CASE("task datasets") {
    SimConfig cfg;
    const auto task = fixture::mid_task(ReactorKind::Cstr, 2);

    CHECK(generate_task_dataset(task, 0, cfg, 1).empty());

    const auto a = generate_task_dataset(task, 200, cfg, 9);
    const auto b = generate_task_dataset(task, 200, cfg, 9);
    REQUIRE(a.size() == 200);
    std::ostringstream sa, sb;
    write_dataset_csv(sa, task, a);
    write_dataset_csv(sb, task, b);
    CHECK(sa.str() == sb.str());

    for (const auto& s : a) {
        CHECK(plausibility_filter(s, task, cfg.limits).accepted());
        CHECK(task.op_ranges.T.contains(s.x0.T));
        CHECK(task.op_ranges.CA.contains(s.x0.CA));
        CHECK(task.op_ranges.u1.contains(s.u.dQ));
        CHECK(task.op_ranges.u2.contains(s.u.dCA0));
    }

    const auto c = generate_task_dataset(task, 50, cfg, 10);
    CHECK(c.front().x0.T != a.front().x0.T);
}

TEST_CASE("a task that rejects nearly everything is infeasible") {
    auto p = fixture::mid_br();
    p.dH = -1.0e8;
    const auto task = fixture::task_with(ReactorKind::Batch, 1, p);
    CHECK_THROWS_AS(generate_task_dataset(task, 20, SimConfig{}, 3), TaskInfeasible);
}

TEST_CASE("dataset csv layout") {
    SimConfig cfg;
    const auto task = fixture::mid_task(ReactorKind::Batch, 1);
    const auto data = generate_task_dataset(task, 2, cfg, 4);
    std::ostringstream os;
    write_dataset_csv(os, task, data);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "kind,order,t_index,T,CA,u1,u2");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 11);
}

TEST_CASE("task metadata round-trips through json") {
    for (auto kind : {ReactorKind::Cstr, ReactorKind::Batch, ReactorKind::Pfr}) {
        auto t = fixture::mid_task(kind, 3);
        t.seed = 1234567890123ULL;
        const auto back = task_from_json(task_to_json(t));
        CHECK(task_to_json(back) == task_to_json(t));
        CHECK(back.kind == kind);
        CHECK(back.order == 3);
        CHECK(back.seed == t.seed);
    }
}

TEST_CASE("control features pad single-input reactors") {
    const ControlInput u{1.0e5, 0.7, 180.0};
    CHECK(control_features(ReactorKind::Cstr, u) == std::pair{1.0e5, 0.7});
    CHECK(control_features(ReactorKind::Batch, u) == std::pair{1.0e5, 1.0e5});
    CHECK(control_features(ReactorKind::Pfr, u) == std::pair{180.0, 180.0});
}
