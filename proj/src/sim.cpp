#include "rfm/sim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rfm/errors.hpp"

namespace rfm {

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::None: return "none";
        case RejectReason::NonFinite: return "non-finite";
        case RejectReason::Magnitude: return "magnitude";
        case RejectReason::NegativeConcentration: return "negative-concentration";
        case RejectReason::TemperatureOutOfBounds: return "temperature-out-of-bounds";
        case RejectReason::RateUnderflow: return "rate-underflow";
    }
    return "unknown";
}

State euler_step(const State& x, const State& dxdt, double h) {
    State out{x.T + h * dxdt.T, x.CA + h * dxdt.CA};
    if (!std::isfinite(out.T) || !std::isfinite(out.CA)) throw NumericalError("euler_step", "non-finite state");
    return out;
}

State euler_step(const TaskSpec& task, const State& x, const ControlInput& u, double h) {
    switch (task.kind) {
        case ReactorKind::Cstr: return euler_step(x, cstr_rhs(x, u, task.cstr(), task.order), h);
        case ReactorKind::Batch: return euler_step(x, br_rhs(x, u, task.br(), task.order), h);
        case ReactorKind::Pfr: break;
    }
    throw std::invalid_argument("lumped euler_step called for a PFR task");
}

std::vector<State> euler_step(const TaskSpec& task, std::span<const State> profile, const ControlInput& u,
                              double h) {
    const auto rates = pfr_rhs(profile, u, task.pfr(), task.order);
    std::vector<State> next(profile.begin(), profile.end());
    for (std::size_t k = 1; k < next.size(); ++k) next[k] = euler_step(profile[k], rates[k], h);
    return next;
}

namespace {

// Checked at every substep: a concentration that dips below zero between
// recorded states marks an unstable Euler step.
void check_substep(const State& s, double big_max) {
    if (!std::isfinite(s.T) || !std::isfinite(s.CA)) throw TrajectoryRejected(RejectReason::NonFinite);
    if (std::abs(s.T) > big_max || std::abs(s.CA) > big_max) throw TrajectoryRejected(RejectReason::Magnitude);
    if (s.CA < 0.0) throw TrajectoryRejected(RejectReason::NegativeConcentration);
}

}  // namespace

Trajectory simulate_period(const TaskSpec& task, const State& x0, const ControlInput& u, const SimConfig& cfg) {
    return simulate_period(task, x0, u, cfg, task.timing.dt_int, cfg.n_out);
}

Trajectory simulate_period(const TaskSpec& task, const State& x0, const ControlInput& u, const SimConfig& cfg,
                           double dt_int, int n_out) {
    const int n_sub = Timing{dt_int, task.timing.dt_sample}.substeps();
    if (n_out < 1 || n_sub % n_out != 0) {
        throw std::invalid_argument("n_out must divide the number of Euler substeps");
    }
    const int stride = n_sub / n_out;
    const double big = cfg.limits.big_max;

    Trajectory traj{x0, u, {}};
    traj.steps.reserve(static_cast<std::size_t>(n_out));
    try {
        if (task.kind == ReactorKind::Pfr) {
            std::vector<State> profile(static_cast<std::size_t>(task.pfr().N), x0);
            for (int s = 1; s <= n_sub; ++s) {
                profile = euler_step(task, profile, u, dt_int);
                for (const auto& node : profile) check_substep(node, big);
                if (s % stride == 0) traj.steps.push_back(profile[1]);
            }
        } else {
            State x = x0;
            for (int s = 1; s <= n_sub; ++s) {
                x = euler_step(task, x, u, dt_int);
                check_substep(x, big);
                if (s % stride == 0) traj.steps.push_back(x);
            }
        }
    } catch (const NumericalError&) {
        throw TrajectoryRejected(RejectReason::NonFinite);
    }

    const auto verdict = plausibility_filter(traj, task, cfg.limits);
    if (!verdict.accepted()) throw TrajectoryRejected(verdict.reason);
    return traj;
}

FilterVerdict plausibility_filter(const Trajectory& traj, const TaskSpec& task, const PlausibilityLimits& limits) {
    const double Ea = task.activation_energy();
    const double R = task.gas_constant();

    auto check = [&](const State& s) -> RejectReason {
        if (!std::isfinite(s.T) || !std::isfinite(s.CA)) return RejectReason::NonFinite;
        if (std::abs(s.T) > limits.big_max || std::abs(s.CA) > limits.big_max) return RejectReason::Magnitude;
        if (s.CA < 0.0) return RejectReason::NegativeConcentration;
        if (s.T <= 0.0 || s.T > limits.T_max) return RejectReason::TemperatureOutOfBounds;
        if (arrhenius(Ea, R, s.T) < limits.arrhenius_floor && s.CA > limits.eps_CA) {
            return RejectReason::RateUnderflow;
        }
        return RejectReason::None;
    };

    if (auto r = check(traj.x0); r != RejectReason::None) return {r};
    for (const auto& s : traj.steps) {
        if (auto r = check(s); r != RejectReason::None) return {r};
    }
    return {};
}

OperatingPoint draw_operating_point(const TaskSpec& task, Rng& rng) {
    const auto& r = task.op_ranges;
    OperatingPoint p;
    p.x.T = uniform(rng, r.T.lo, r.T.hi);
    p.x.CA = uniform(rng, r.CA.lo, r.CA.hi);
    switch (task.kind) {
        case ReactorKind::Cstr:
            p.u.dQ = uniform(rng, r.u1.lo, r.u1.hi);
            p.u.dCA0 = uniform(rng, r.u2.lo, r.u2.hi);
            break;
        case ReactorKind::Batch: p.u.dQ = uniform(rng, r.u1.lo, r.u1.hi); break;
        case ReactorKind::Pfr: p.u.dTc = uniform(rng, r.u1.lo, r.u1.hi); break;
    }
    return p;
}

std::vector<Sample> generate_task_dataset(const TaskSpec& task, int n_samples, const SimConfig& cfg,
                                          std::uint64_t seed) {
    std::vector<Sample> out;
    if (n_samples <= 0) return out;
    out.reserve(static_cast<std::size_t>(n_samples));

    const long max_attempts = 50L + 20L * n_samples;
    long attempts = 0;
    long rejected = 0;
    while (static_cast<int>(out.size()) < n_samples) {
        if (attempts >= max_attempts) {
            throw TaskInfeasible("task exhausted " + std::to_string(max_attempts) + " simulation attempts");
        }
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempts)}));
        ++attempts;
        const auto op = draw_operating_point(task, rng);
        try {
            out.push_back(simulate_period(task, op.x, op.u, cfg));
        } catch (const TrajectoryRejected&) {
            ++rejected;
        }
        if (attempts >= cfg.min_attempts_for_infeasible &&
            static_cast<double>(rejected) > cfg.max_rejection_rate * static_cast<double>(attempts)) {
            throw TaskInfeasible("rejection rate above threshold (" + std::to_string(rejected) + "/" +
                                 std::to_string(attempts) + ")");
        }
    }
    return out;
}

std::pair<double, double> control_features(ReactorKind kind, const ControlInput& u) {
    switch (kind) {
        case ReactorKind::Cstr: return {u.dQ, u.dCA0};
        case ReactorKind::Batch: return {u.dQ, u.dQ};
        case ReactorKind::Pfr: return {u.dTc, u.dTc};
    }
    return {0.0, 0.0};
}

void write_dataset_csv(std::ostream& os, const TaskSpec& task, std::span<const Sample> samples) {
    const auto kind = to_string(task.kind);
    char buf[256];
    os << "kind,order,t_index,T,CA,u1,u2\n";
    for (const auto& s : samples) {
        const auto [u1, u2] = control_features(task.kind, s.u);
        auto row = [&](std::size_t t, const State& x) {
            std::snprintf(buf, sizeof buf, "%.*s,%d,%zu,%.17g,%.17g,%.17g,%.17g\n", static_cast<int>(kind.size()),
                          kind.data(), task.order, t, x.T, x.CA, u1, u2);
            os << buf;
        };
        row(0, s.x0);
        for (std::size_t t = 0; t < s.steps.size(); ++t) row(t + 1, s.steps[t]);
    }
}

namespace {

using nlohmann::json;

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }
Interval interval_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string task_to_json(const TaskSpec& task) {
    json j;
    j["kind"] = std::string(to_string(task.kind));
    j["order"] = task.order;
    j["seed"] = task.seed;
    j["dt_int"] = task.timing.dt_int;
    j["dt_sample"] = task.timing.dt_sample;
    j["op_ranges"] = {{"T", interval_json(task.op_ranges.T)},
                      {"CA", interval_json(task.op_ranges.CA)},
                      {"u1", interval_json(task.op_ranges.u1)},
                      {"u2", interval_json(task.op_ranges.u2)}};
    json p;
    switch (task.kind) {
        case ReactorKind::Cstr: {
            const auto& c = task.cstr();
            p = {{"F", c.F},   {"V", c.V},       {"T0", c.T0}, {"CA0s", c.CA0s}, {"Qs", c.Qs}, {"rhoL", c.rhoL},
                 {"Cp", c.Cp}, {"Ea", c.Ea},     {"k0", c.k0}, {"dH", c.dH},     {"R", c.R}};
            break;
        }
        case ReactorKind::Batch: {
            const auto& b = task.br();
            p = {{"V", b.V},   {"Qs", b.Qs}, {"rhoL", b.rhoL}, {"Cp", b.Cp},
                 {"Ea", b.Ea}, {"k0", b.k0}, {"dH", b.dH},     {"R", b.R}};
            break;
        }
        case ReactorKind::Pfr: {
            const auto& f = task.pfr();
            p = {{"A", f.A},     {"Ac", f.Ac},     {"L", f.L},   {"u", f.u},   {"U", f.U},
                 {"N", f.N},     {"Tcs", f.Tcs},   {"rhoL", f.rhoL}, {"Cp", f.Cp},
                 {"Ea", f.Ea},   {"k0", f.k0},     {"dH", f.dH}, {"R", f.R}};
            break;
        }
    }
    j["params"] = p;
    return j.dump(2);
}

TaskSpec task_from_json(const std::string& text) {
    const json j = json::parse(text);
    TaskSpec t;
    t.kind = parse_kind(j.at("kind").get<std::string>());
    t.order = j.at("order").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.timing = {j.at("dt_int").get<double>(), j.at("dt_sample").get<double>()};
    const auto& r = j.at("op_ranges");
    t.op_ranges = {interval_from(r.at("T")), interval_from(r.at("CA")), interval_from(r.at("u1")),
                   interval_from(r.at("u2"))};
    const auto& p = j.at("params");
    auto d = [&](const char* k) { return p.at(k).get<double>(); };
    switch (t.kind) {
        case ReactorKind::Cstr:
            t.params = CstrParams{d("F"), d("V"), d("T0"), d("CA0s"), d("Qs"), d("rhoL"),
                                  d("Cp"), d("Ea"), d("k0"), d("dH"), d("R")};
            break;
        case ReactorKind::Batch:
            t.params = BrParams{d("V"), d("Qs"), d("rhoL"), d("Cp"), d("Ea"), d("k0"), d("dH"), d("R")};
            break;
        case ReactorKind::Pfr:
            t.params = PfrParams{d("A"),    d("Ac"), d("L"),  d("u"),  d("U"),  p.at("N").get<int>(), d("Tcs"),
                                 d("rhoL"), d("Cp"), d("Ea"), d("k0"), d("dH"), d("R")};
            break;
    }
    return t;
}

}  // namespace rfm
