#pragma once

#include <cstdint>

#include "rfm/reactor.hpp"
#include "rfm/tasks.hpp"

namespace fixture {

inline rfm::CstrParams mid_cstr() {
    const rfm::CstrRanges r;
    const auto k = rfm::kinetic_ranges(rfm::ReactorKind::Cstr);
    rfm::CstrParams p;
    p.F = r.F.mid();
    p.V = r.V.mid();
    p.T0 = r.T0.mid();
    p.CA0s = r.CA0s.mid();
    p.Qs = r.Qs;
    p.rhoL = k.rhoL.mid();
    p.Cp = k.Cp.mid();
    p.Ea = k.Ea.mid();
    p.k0 = k.k0.mid();
    p.dH = k.dH.mid();
    return p;
}

inline rfm::BrParams mid_br() {
    const auto k = rfm::kinetic_ranges(rfm::ReactorKind::Batch);
    rfm::BrParams p;
    p.V = rfm::BrRanges{}.V.mid();
    p.rhoL = k.rhoL.mid();
    p.Cp = k.Cp.mid();
    p.Ea = k.Ea.mid();
    p.k0 = k.k0.mid();
    p.dH = k.dH.mid();
    return p;
}

inline rfm::PfrParams mid_pfr() {
    const rfm::PfrRanges r;
    const auto k = rfm::kinetic_ranges(rfm::ReactorKind::Pfr);
    rfm::PfrParams p;
    p.A = r.A.mid();
    p.Ac = r.Ac.mid();
    p.L = r.L;
    p.u = r.u.mid();
    p.U = r.U.mid();
    p.N = r.N;
    p.Tcs = r.Tcs.mid();
    p.rhoL = k.rhoL.mid();
    p.Cp = k.Cp.mid();
    p.Ea = k.Ea.mid();
    p.k0 = k.k0.mid();
    p.dH = k.dH.mid();
    return rfm::pfr_to_integrator_units(p);
}

inline rfm::TaskSpec task_with(rfm::ReactorKind kind, int order, rfm::ReactorParams params) {
    rfm::TaskSpec t;
    t.kind = kind;
    t.order = order;
    t.params = params;
    t.op_ranges = rfm::default_op_ranges(kind);
    t.timing = rfm::default_timing(kind);
    return t;
}

inline rfm::TaskSpec mid_task(rfm::ReactorKind kind, int order) {
    switch (kind) {
        case rfm::ReactorKind::Cstr: return task_with(kind, order, mid_cstr());
        case rfm::ReactorKind::Batch: return task_with(kind, order, mid_br());
        case rfm::ReactorKind::Pfr: return task_with(kind, order, mid_pfr());
    }
    return {};
}

}  // namespace fixture
