#pragma once

#include <span>
#include <vector>

#include "rfm/reactor.hpp"
#include "rfm/rnn.hpp"
#include "rfm/sim.hpp"
#include "rfm/tasks.hpp"

namespace rfm {

/// Parameters seen by the physics residuals. The five kinetic/thermal
/// unknowns (k0, Ea, dH, Cp, rhoL) sit at the midpoints of their sampling
/// ranges; everything else is the task's known design data. Built only via
/// make_estimated_params (or exact_params for verification), so the residuals
/// never see the true kinetics.
struct EstimatedParams {
    ReactorKind kind = ReactorKind::Cstr;
    int order = 1;
    ReactorParams params;
};

EstimatedParams make_estimated_params(const TaskSpec& task);

/// The task's true parameters in the same shape, for consistency checks.
EstimatedParams exact_params(const TaskSpec& task);

struct LossWeights {
    double g1 = 1.0e3;   // data
    double g2 = 1.0e-2;  // concentration residual
    double g3 = 1.0e-5;  // temperature residual
};

struct LossBreakdown {
    double L_d = 0.0;
    double L_CA = 0.0;
    double L_T = 0.0;
    double total = 0.0;
};

LossBreakdown total_loss(const LossWeights& w, double L_d, double L_CA, double L_T);

struct DataLoss {
    double value = 0.0;
    Sequence grad;  // dL/dpred, same shape as pred
};

/// Mean squared error over every element of every step.
DataLoss data_loss(const Sequence& pred, const Sequence& target);

struct PhysicsLoss {
    double L_CA = 0.0;
    double L_T = 0.0;
    Sequence grad_CA;  // dL_CA/dpred
    Sequence grad_T;   // dL_T/dpred
};

/// Pointwise balance residuals at one recorded step, in physical units per hour.
struct Residual {
    double CA = 0.0;
    double T = 0.0;
};

/// r = (X - X_prev)/dt - f(X), with the upstream (PFR) state and the held
/// input taken from the collocation point.
Residual balance_residual(const EstimatedParams& est, const OperatingPoint& point, const State& prev,
                          const State& x, double dt);

/// Divisors applied to the CA and T residuals before squaring.
struct ResidualScale {
    double CA = 1.0;
    double T = 1.0;
};

/// Physical: residuals in kmol/m^3 hr and K/hr as they stand. OpRange:
/// each residual divided by the width of its state's normalization interval.
enum class ResidualUnits { Physical, OpRange };

ResidualScale residual_scale(ResidualUnits units, const NormSpec& norm);

/// Residual losses of normalized predictions `pred` (2 x M per step) for the
/// M collocation points. Predictions are denormalized with `norm`; the first
/// difference is anchored at the collocation state; each residual is divided
/// by its entry in `scale` before squaring, and the squares are averaged over
/// points and steps.
PhysicsLoss physics_residuals(const EstimatedParams& est, const Sequence& pred,
                              std::span<const OperatingPoint> collocation, const NormSpec& norm, double dt,
                              const ResidualScale& scale);

}  // namespace rfm
