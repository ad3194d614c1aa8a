#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfm/reactor.hpp"
#include "rfm/rng.hpp"

namespace rfm {

struct PlausibilityLimits {
    double T_max = 1200.0;            // K
    double big_max = 1.0e6;           // any |state| above this is rejected
    double eps_CA = 1.0e-3;           // kmol/m^3
    double arrhenius_floor = 1.0e-12; // exp(-Ea/RT) below this counts as underflow
};

struct SimConfig {
    int n_out = 10;  // recorded states per sampling period
    PlausibilityLimits limits;
    int min_attempts_for_infeasible = 50;
    double max_rejection_rate = 0.9;
};

/// One sampling period: the initial state, the held input and `n_out`
/// recorded states at spacing dt_sample / n_out. For a PFR the states are
/// those of the first node downstream of the inlet.
struct Trajectory {
    State x0;
    ControlInput u;
    std::vector<State> steps;
};

using Sample = Trajectory;

enum class RejectReason : std::uint8_t {
    None,
    NonFinite,
    Magnitude,
    NegativeConcentration,
    TemperatureOutOfBounds,
    RateUnderflow,
};

std::string_view to_string(RejectReason reason);

struct FilterVerdict {
    RejectReason reason = RejectReason::None;
    bool accepted() const { return reason == RejectReason::None; }
};

class TrajectoryRejected : public std::runtime_error {
public:
    explicit TrajectoryRejected(RejectReason reason)
        : std::runtime_error("trajectory rejected: " + std::string(to_string(reason))), reason_(reason) {}
    RejectReason reason() const noexcept { return reason_; }

private:
    RejectReason reason_;
};

/// x + h * dxdt.
State euler_step(const State& x, const State& dxdt, double h);

/// One explicit Euler step of a lumped (CSTR or batch) task.
State euler_step(const TaskSpec& task, const State& x, const ControlInput& u, double h);

/// One explicit Euler step of a PFR profile; the inlet node is unchanged.
std::vector<State> euler_step(const TaskSpec& task, std::span<const State> profile, const ControlInput& u,
                              double h);

/// Integrates one sampling period with constant input. Throws
/// TrajectoryRejected when the result fails the plausibility filter, or when
/// any substep is non-finite, oversized or has a negative concentration.
Trajectory simulate_period(const TaskSpec& task, const State& x0, const ControlInput& u, const SimConfig& cfg);

/// Same as simulate_period but with an explicit integration step and number of
/// recorded states; used for refinement studies.
Trajectory simulate_period(const TaskSpec& task, const State& x0, const ControlInput& u, const SimConfig& cfg,
                           double dt_int, int n_out);

FilterVerdict plausibility_filter(const Trajectory& traj, const TaskSpec& task, const PlausibilityLimits& limits);

/// Uniform draw of an initial state and input from the task's operational
/// ranges. Batch and PFR inputs are single-valued.
struct OperatingPoint {
    State x;
    ControlInput u;
};
OperatingPoint draw_operating_point(const TaskSpec& task, Rng& rng);

/// First `n_samples` accepted trajectories for draws from stream `seed`.
/// Attempt i uses the RNG stream derive_seed(seed, {i}). Throws
/// TaskInfeasible when the rejection rate exceeds cfg.max_rejection_rate.
std::vector<Sample> generate_task_dataset(const TaskSpec& task, int n_samples, const SimConfig& cfg,
                                          std::uint64_t seed);

/// Dataset export: header `kind,order,t_index,T,CA,u1,u2`; t_index 0 is the
/// initial state of each sample.
void write_dataset_csv(std::ostream& os, const TaskSpec& task, std::span<const Sample> samples);
std::string task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const std::string& text);

/// Model-input view of a control: (u1, u2).
std::pair<double, double> control_features(ReactorKind kind, const ControlInput& u);

}  // namespace rfm
