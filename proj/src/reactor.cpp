#include "rfm/reactor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rfm/errors.hpp"

namespace rfm {

std::string_view to_string(ReactorKind kind) {
    switch (kind) {
        case ReactorKind::Cstr: return "cstr";
        case ReactorKind::Batch: return "batch";
        case ReactorKind::Pfr: return "pfr";
    }
    return "unknown";
}

ReactorKind parse_kind(std::string_view name) {
    if (name == "cstr") return ReactorKind::Cstr;
    if (name == "batch" || name == "br") return ReactorKind::Batch;
    if (name == "pfr") return ReactorKind::Pfr;
    throw std::invalid_argument("unknown reactor kind: " + std::string(name));
}

PfrParams pfr_to_integrator_units(PfrParams tabulated, PfrUnitFactors factors) {
    tabulated.u *= factors.velocity;
    tabulated.U *= factors.heat_transfer;
    return tabulated;
}

OpRanges default_op_ranges(ReactorKind kind) {
    switch (kind) {
        case ReactorKind::Cstr:
            return {{300.0, 600.0}, {0.0, 6.0}, {-5.0e5, 5.0e5}, {-3.5, 3.5}};
        case ReactorKind::Batch:
            return {{300.0, 600.0}, {0.0, 6.0}, {-5.0e5, 5.0e5}, {-5.0e5, 5.0e5}};
        case ReactorKind::Pfr:
            return {{300.0, 500.0}, {0.5, 3.0}, {100.0, 300.0}, {100.0, 300.0}};
    }
    throw std::invalid_argument("bad reactor kind");
}

Timing default_timing(ReactorKind kind) {
    switch (kind) {
        case ReactorKind::Cstr: return {1.0e-4, 5.0e-3};
        case ReactorKind::Batch: return {1.0e-4, 5.0e-2};
        case ReactorKind::Pfr: return {0.01, 0.1};
    }
    throw std::invalid_argument("bad reactor kind");
}

int Timing::substeps() const {
    if (!(dt_int > 0.0) || !(dt_sample > 0.0)) throw std::invalid_argument("timing steps must be positive");
    const double ratio = dt_sample / dt_int;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * ratio) {
        throw std::invalid_argument("dt_int must evenly divide dt_sample");
    }
    return static_cast<int>(n);
}

double TaskSpec::activation_energy() const {
    return std::visit([](const auto& p) { return p.Ea; }, params);
}

double TaskSpec::gas_constant() const {
    return std::visit([](const auto& p) { return p.R; }, params);
}

double arrhenius(double Ea, double R, double T) {
    if (!(T > 0.0)) return 0.0;
    return std::exp(-Ea / (R * T));
}

double int_pow(double x, int order) {
    if (order <= 0) return 1.0;
    double r = x;
    for (int i = 1; i < order; ++i) r *= x;
    return r;
}

double reaction_rate(double k0, double Ea, double R, double T, double CA, int order) {
    return k0 * arrhenius(Ea, R, T) * int_pow(CA, order);
}

namespace {

void require_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(term, "non-finite right-hand side");
}

}  // namespace

State cstr_rhs(const State& x, const ControlInput& u, const CstrParams& p, int order) {
    const double CA0 = p.CA0s + u.dCA0;
    const double Q = p.Qs + u.dQ;
    const double rate = reaction_rate(p.k0, p.Ea, p.R, x.T, x.CA, order);
    require_finite(rate, "cstr.rate");

    const double dCA = p.F / p.V * (CA0 - x.CA) - rate;
    const double dT = p.F / p.V * (p.T0 - x.T) + (-p.dH) / (p.rhoL * p.Cp) * rate + Q / (p.rhoL * p.Cp * p.V);
    require_finite(dCA, "cstr.dCA/dt");
    require_finite(dT, "cstr.dT/dt");
    return {dT, dCA};
}

State br_rhs(const State& x, const ControlInput& u, const BrParams& p, int order) {
    const double Q = p.Qs + u.dQ;
    const double rate = reaction_rate(p.k0, p.Ea, p.R, x.T, x.CA, order);
    require_finite(rate, "batch.rate");

    const double dCA = -rate;
    const double dT = (-p.dH) / (p.rhoL * p.Cp) * rate + Q / (p.rhoL * p.Cp * p.V);
    require_finite(dCA, "batch.dCA/dt");
    require_finite(dT, "batch.dT/dt");
    return {dT, dCA};
}

std::vector<State> pfr_rhs(std::span<const State> profile, const ControlInput& u, const PfrParams& p,
                           int order) {
    if (profile.size() != static_cast<std::size_t>(p.N) || p.N < 2) {
        throw std::invalid_argument("pfr profile must have N >= 2 nodes");
    }
    const double dz = p.dz();
    const double Tc = p.Tcs + u.dTc;
    std::vector<State> out(profile.size());  // inlet stays {0, 0}
    for (std::size_t k = 1; k < profile.size(); ++k) {
        const State& x = profile[k];
        const State& up = profile[k - 1];
        const double rate = reaction_rate(p.k0, p.Ea, p.R, x.T, x.CA, order);
        require_finite(rate, "pfr.rate");

        const double dCA = -p.u * (x.CA - up.CA) / dz - rate;
        const double dT = -p.u * (x.T - up.T) / dz + (-p.dH) / (p.rhoL * p.Cp) * rate +
                          p.U / (p.rhoL * p.Cp * p.A) * p.Ac * (Tc - x.T);
        require_finite(dCA, "pfr.dCA/dt");
        require_finite(dT, "pfr.dT/dt");
        out[k] = {dT, dCA};
    }
    return out;
}

}  // namespace rfm
