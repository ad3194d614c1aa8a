#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rfm/reactor.hpp"
#include "rfm/rnn.hpp"
#include "rfm/sim.hpp"

namespace rfm {

/// Ranges of the kinetic/thermal parameters that are unknown for a new
/// reaction. Shared by all three reactor kinds except for k0.
struct KineticRanges {
    Interval k0;
    Interval Ea;
    Interval dH;
    Interval Cp;
    Interval rhoL;
};

KineticRanges kinetic_ranges(ReactorKind kind);

struct CstrRanges {
    Interval F{0.0, 55.0};
    Interval V{0.0, 11.0};
    Interval T0{0.0, 600.0};
    Interval CA0s{0.0, 8.0};
    double Qs = 0.0;
};

struct BrRanges {
    Interval V{0.0, 11.0};
};

/// Tabulated units (u in m/min, U in kcal/m^2 K).
struct PfrRanges {
    Interval A{0.0, 0.022};
    Interval Ac{0.0, 0.11};
    double L = 1.0;
    Interval u{0.0, 4.0};
    Interval U{0.0, 50.0};
    int N = 10;
    Interval Tcs{273.0, 586.0};
};

/// Draws every parameter uniformly over its interval; op ranges and timing are
/// the defaults for the kind. Deterministic in `seed`.
TaskSpec sample_task(ReactorKind kind, int order, std::uint64_t seed);

/// Per-feature min-max bounds; targets use the first two (T, CA).
struct NormSpec {
    std::array<Interval, 4> input;

    const Interval& T() const { return input[0]; }
    const Interval& CA() const { return input[1]; }
};

NormSpec norm_spec(const OpRanges& ranges);
NormSpec norm_spec(ReactorKind kind);

inline double normalize(double x, const Interval& i) { return (x - i.lo) / (i.hi - i.lo); }
inline double denormalize(double x, const Interval& i) { return i.lo + x * (i.hi - i.lo); }

using ModelInput = std::array<double, 4>;
using ModelTarget = std::array<double, 2>;  // normalized (T, CA)

/// Normalized [T, CA, u1, u2] with padding u2 = u1 for batch and PFR.
ModelInput model_input(ReactorKind kind, const NormSpec& norm, const State& x, const ControlInput& u);

struct ModelIO {
    std::vector<ModelInput> inputs;    // replicated over n_out steps
    std::vector<ModelTarget> targets;  // n_out steps
};

ModelIO build_model_io(const TaskSpec& task, const Sample& sample);
ModelIO build_model_io(ReactorKind kind, const NormSpec& norm, const Sample& sample);

/// Physical state from a normalized target.
State denormalize_state(const NormSpec& norm, const ModelTarget& y);

/// Stacks samples into an RNN batch (4 x B per step) and the matching
/// target batch (2 x B per step).
Sequence input_batch(std::span<const ModelIO> samples);
Sequence target_batch(std::span<const ModelIO> samples);

/// Input batch for unlabeled points, the constant input replicated `steps` times.
Sequence input_batch(std::span<const ModelInput> points, int steps);

struct ShotSet {
    std::vector<Sample> shots;
    std::vector<OperatingPoint> collocation;
};

/// K simulated shots and M collocation points from the task's operational
/// region, with no collocation input equal to a shot input.
ShotSet draw_shot_set(const TaskSpec& task, int K, int M, const SimConfig& cfg, std::uint64_t seed);

/// Draws M collocation points disjoint from `shots`.
std::vector<OperatingPoint> draw_collocation(const TaskSpec& task, std::span<const Sample> shots, int M,
                                             std::uint64_t seed);

}  // namespace rfm
