#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace rfm {

enum class ReactorKind : std::uint8_t { Cstr = 0, Batch = 1, Pfr = 2 };

std::string_view to_string(ReactorKind kind);
/// Accepts "cstr", "batch"/"br", "pfr" (case-sensitive).
ReactorKind parse_kind(std::string_view name);

inline constexpr double kGasConstant = 8.314;  // kJ/kmol K

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr double mid() const { return 0.5 * (lo + hi); }
    constexpr double width() const { return hi - lo; }
    constexpr bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Lumped reactor state. For a PFR this is one node of the profile.
struct State {
    double T = 0.0;   // K
    double CA = 0.0;  // kmol/m^3
};

/// Manipulated inputs, deviations from steady state. Only the fields that
/// belong to a kind are read: CSTR (dQ, dCA0), batch (dQ), PFR (dTc).
struct ControlInput {
    double dQ = 0.0;    // kJ/hr
    double dCA0 = 0.0;  // kmol/m^3
    double dTc = 0.0;   // K
};

struct CstrParams {
    double F = 0.0;     // m^3/hr
    double V = 0.0;     // m^3
    double T0 = 0.0;    // K
    double CA0s = 0.0;  // kmol/m^3
    double Qs = 0.0;    // kJ/hr
    double rhoL = 0.0;  // kg/m^3
    double Cp = 0.0;    // kJ/kg K
    double Ea = 0.0;    // kJ/kmol
    double k0 = 0.0;
    double dH = 0.0;    // kJ/kmol
    double R = kGasConstant;
};

struct BrParams {
    double V = 0.0;
    double Qs = 0.0;
    double rhoL = 0.0;
    double Cp = 0.0;
    double Ea = 0.0;
    double k0 = 0.0;
    double dH = 0.0;
    double R = kGasConstant;
};

/// Plug-flow parameters in integrator units (see pfr_to_integrator_units).
struct PfrParams {
    double A = 0.0;    // m^2
    double Ac = 0.0;   // m^2
    double L = 1.0;    // m
    double u = 0.0;    // m per integrator hour
    double U = 0.0;    // kJ/m^2 K hr
    int N = 10;
    double Tcs = 0.0;  // K
    double rhoL = 0.0;
    double Cp = 0.0;
    double Ea = 0.0;
    double k0 = 0.0;
    double dH = 0.0;
    double R = kGasConstant;

    double dz() const { return L / static_cast<double>(N - 1); }
};

/// Conversion factors from the tabulated PFR units to integrator units.
/// The tabulated velocity is kept numerically as the per-hour value: a 60x
/// conversion puts u*h/dz far above the upwind Euler stability bound of 1
/// for h = 0.01 hr and dz = L/9.
struct PfrUnitFactors {
    double velocity = 1.0;
    double heat_transfer = 4.184;  // kcal -> kJ
};

PfrParams pfr_to_integrator_units(PfrParams tabulated, PfrUnitFactors factors = {});

using ReactorParams = std::variant<CstrParams, BrParams, PfrParams>;

/// Sampling intervals for states and inputs. For batch and PFR `u2` mirrors
/// `u1` (the single manipulated input).
struct OpRanges {
    Interval T;
    Interval CA;
    Interval u1;
    Interval u2;
};

OpRanges default_op_ranges(ReactorKind kind);

struct Timing {
    double dt_int = 0.0;     // hr
    double dt_sample = 0.0;  // hr

    /// Number of Euler substeps per sampling period; throws if dt_int does
    /// not evenly divide dt_sample.
    int substeps() const;
};

Timing default_timing(ReactorKind kind);

struct TaskSpec {
    ReactorKind kind = ReactorKind::Cstr;
    int order = 1;
    ReactorParams params;
    OpRanges op_ranges;
    Timing timing;
    std::uint64_t seed = 0;

    const CstrParams& cstr() const { return std::get<CstrParams>(params); }
    const BrParams& br() const { return std::get<BrParams>(params); }
    const PfrParams& pfr() const { return std::get<PfrParams>(params); }

    /// Activation energy of the true kinetics (used by the plausibility filter).
    double activation_energy() const;
    double gas_constant() const;
};

/// exp(-Ea/(R T)) for T > 0, and 0 otherwise.
double arrhenius(double Ea, double R, double T);

/// CA^order for integer order >= 0.
double int_pow(double x, int order);

/// k0 exp(-Ea/RT) CA^order.
double reaction_rate(double k0, double Ea, double R, double T, double CA, int order);

/// Material and energy balances. The returned State holds (dT/dt, dCA/dt).
State cstr_rhs(const State& x, const ControlInput& u, const CstrParams& p, int order);
State br_rhs(const State& x, const ControlInput& u, const BrParams& p, int order);

/// Method-of-lines PFR right-hand side. Node 0 is the inlet and is held
/// fixed (its derivative is zero); node k uses the upwind difference
/// (X_k - X_{k-1}) / dz.
std::vector<State> pfr_rhs(std::span<const State> profile, const ControlInput& u, const PfrParams& p,
                           int order);

}  // namespace rfm
